"""Sampled diffraction curves and their moment analysis.

A curve is intensity versus Bragg-angle offset on a uniform, symmetric
grid. Moments use the rectangle rule, which keeps the additivity and
linearity identities of un-normalized moments exact on the shared grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from parallax_dxt.errors import DegenerateCurve, TruncatedPeak

#: Default grid: 257 samples spanning +-5 mrad.
DEFAULT_HALF_SPAN = 5e-3
DEFAULT_SAMPLES = 257

#: Degeneracy floor for normalized moments, relative to peak * span.
DEFAULT_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class AngleGrid:
    """Uniform Bragg-angle offset samples, symmetric about an exact zero."""

    offsets: np.ndarray
    step: float

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        object.__setattr__(self, "offsets", offsets)
        if offsets.ndim != 1 or offsets.size < 3 or offsets.size % 2 == 0:
            raise ValueError("offset grid must be 1-D with an odd length >= 3")
        diffs = np.diff(offsets)
        if not np.all(diffs > 0):
            raise ValueError("offsets must be strictly increasing")
        if not np.allclose(diffs, self.step, rtol=1e-9, atol=0.0):
            raise ValueError("offsets must be uniformly spaced with the stated step")
        if offsets[offsets.size // 2] != 0.0:
            raise ValueError("grid must contain an exact zero sample at its center")
        if not np.allclose(offsets + offsets[::-1], 0.0, atol=1e-15 * abs(offsets[-1])):
            raise ValueError("grid must be symmetric about zero")

    @classmethod
    def centered(cls, half_span: float = DEFAULT_HALF_SPAN, n_samples: int = DEFAULT_SAMPLES) -> "AngleGrid":
        """Grid of n_samples points covering [-half_span, half_span]."""
        if n_samples < 3 or n_samples % 2 == 0:
            raise ValueError("n_samples must be odd and >= 3")
        if half_span <= 0:
            raise ValueError("half_span must be positive")
        half = n_samples // 2
        step = half_span / half
        return cls(offsets=(np.arange(n_samples) - half) * step, step=step)

    @property
    def n_samples(self) -> int:
        return self.offsets.size

    @property
    def half_span(self) -> float:
        return float(self.offsets[-1])

    @property
    def width(self) -> float:
        """Total integration width n * step (each sample owns one step)."""
        return self.n_samples * self.step


@dataclass(frozen=True)
class DiffractionCurve:
    """Non-negative intensity sampled on an AngleGrid."""

    grid: AngleGrid
    intensity: np.ndarray

    def __post_init__(self):
        intensity = np.asarray(self.intensity, dtype=float)
        object.__setattr__(self, "intensity", intensity)
        if intensity.shape != self.grid.offsets.shape:
            raise ValueError("intensity and grid lengths differ")
        if np.any(intensity < 0):
            raise ValueError("intensity must be non-negative")

    def __add__(self, other: "DiffractionCurve") -> "DiffractionCurve":
        if not np.array_equal(self.grid.offsets, other.grid.offsets):
            raise ValueError("curves live on different grids")
        return DiffractionCurve(self.grid, self.intensity + other.intensity)

    def __mul__(self, k: float) -> "DiffractionCurve":
        return DiffractionCurve(self.grid, self.intensity * k)

    __rmul__ = __mul__


def moment0(c: DiffractionCurve) -> float:
    """Total diffracted intensity: rectangle-rule integral of the curve."""
    return float(c.intensity.sum() * c.grid.step)


def moment1_raw(c: DiffractionCurve) -> float:
    """Un-normalized first moment: integral of offset * intensity."""
    return float((c.grid.offsets * c.intensity).sum() * c.grid.step)


def moment1(c: DiffractionCurve, floor_rel: float = DEFAULT_FLOOR_REL) -> float:
    """Centroid offset of the curve, moment1_raw / moment0.

    Raises DegenerateCurve when the integrated intensity is at or below
    floor_rel * peak * width, signalling an empty or vacuum ray.
    """
    m0 = moment0(c)
    floor = floor_rel * float(c.intensity.max(initial=0.0)) * c.grid.width
    if m0 <= floor:
        raise DegenerateCurve(f"moment0 = {m0:g} at or below floor {floor:g}")
    return moment1_raw(c) / m0


def make_peak(grid: AngleGrid, center: float, width: float, amplitude: float = 1.0) -> DiffractionCurve:
    """Gaussian line profile amplitude * exp(-(d - center)^2 / (2 width^2)).

    Warns TruncatedPeak when the +-3 width core leaks past the grid edge,
    since moments of the sampled curve then become biased.
    """
    if width <= 0:
        raise ValueError("peak width must be positive")
    if abs(center) + 3.0 * width > grid.half_span:
        warnings.warn(
            f"peak at {center:g} with width {width:g} leaks past the grid edge",
            TruncatedPeak,
            stacklevel=2,
        )
    arg = (grid.offsets - center) / width
    return DiffractionCurve(grid, amplitude * np.exp(-0.5 * arg * arg))


def shift(c: DiffractionCurve, delta: float) -> DiffractionCurve:
    """Curve displaced by +delta via linear resampling on the same grid."""
    moved = np.interp(c.grid.offsets - delta, c.grid.offsets, c.intensity, left=0.0, right=0.0)
    return DiffractionCurve(c.grid, moved)


def dump_curve(c: DiffractionCurve, stream) -> None:
    """Write the curve as two-column text (offset, intensity)."""
    for d, v in zip(c.grid.offsets, c.intensity):
        stream.write(f"{d:.9e} {v:.9e}\n")
