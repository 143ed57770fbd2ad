"""Scan geometry and closed-form parallax expressions.

Angles are radians and lengths millimetres throughout; degree conversion
happens at the CLI boundary only. The rotation angle phi is measured
counter-clockwise and the lateral ray coordinate is t = x cos(phi) + y
sin(phi), with the rotation axis at the world origin.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

_UNIFORM_RTOL = 1e-9


def uniform_angles(n: int, span: float = TWO_PI, start: float = 0.0) -> np.ndarray:
    """Rotation schedule of n angles uniformly covering [start, start + span)."""
    if n < 1:
        raise ValueError("rotation schedule needs at least one angle")
    return start + span * np.arange(n) / n


@dataclass(frozen=True)
class ScanGeometry:
    """Pencil-beam translation/rotation scan around a fixed axis.

    bragg_theta is the Bragg angle theta (half the scattering angle),
    det_distance the sample-detector distance z. Rays are offset laterally
    by t relative to the rotation axis, translation_pitch apart, centered
    so the t grid is symmetric about the axis.
    """

    bragg_theta: float
    det_distance: float
    pixel_pitch: float
    n_translations: int
    translation_pitch: float
    rotation_angles: np.ndarray
    rotation_span: float

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.rotation_angles, dtype=float))
        object.__setattr__(self, "rotation_angles", angles)
        if not 0.0 < self.bragg_theta < np.pi / 4:
            raise ValueError(f"bragg_theta must lie in (0, pi/4), got {self.bragg_theta!r}")
        for name in ("det_distance", "pixel_pitch", "translation_pitch"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n_translations < 1:
            raise ValueError("n_translations must be at least 1")
        if angles.ndim != 1 or angles.size == 0:
            raise ValueError("rotation_angles must be a non-empty 1-D sequence")
        if angles.size > 1 and not np.all(np.diff(angles) > 0):
            raise ValueError("rotation_angles must be strictly increasing")
        if self.rotation_span <= 0:
            raise ValueError("rotation_span must be positive")
        if abs(self.rotation_span - TWO_PI) <= _UNIFORM_RTOL * TWO_PI:
            # Full-turn schedules must tile [0, 2pi) evenly; Eq.-10-style
            # cancellation and opposite-ray pairing rely on it.
            if angles[0] < 0.0 or angles[-1] >= TWO_PI:
                raise ValueError("full-turn schedule must lie within [0, 2pi)")
            if not self.is_uniform:
                raise ValueError("full-turn schedule must be uniformly spaced")

    @classmethod
    def uniform(
        cls,
        bragg_theta: float,
        det_distance: float,
        pixel_pitch: float,
        n_translations: int,
        translation_pitch: float,
        n_angles: int,
        span: float = TWO_PI,
    ) -> "ScanGeometry":
        """Geometry with a uniform rotation schedule over [0, span)."""
        return cls(
            bragg_theta=bragg_theta,
            det_distance=det_distance,
            pixel_pitch=pixel_pitch,
            n_translations=n_translations,
            translation_pitch=translation_pitch,
            rotation_angles=uniform_angles(n_angles, span),
            rotation_span=span,
        )

    @property
    def n_angles(self) -> int:
        return self.rotation_angles.size

    @property
    def is_uniform(self) -> bool:
        """True when the schedule step matches rotation_span / n_angles everywhere."""
        step = self.rotation_span / self.n_angles
        if self.n_angles == 1:
            return True
        return bool(np.allclose(np.diff(self.rotation_angles), step, rtol=_UNIFORM_RTOL, atol=1e-12))

    @property
    def tan_two_theta(self) -> float:
        return float(np.tan(2.0 * self.bragg_theta))

    @property
    def parallax_coefficient(self) -> float:
        """Angular parallax per unit lateral offset: tan(2 theta) / z, in rad/mm."""
        return self.tan_two_theta / self.det_distance

    @property
    def t_offsets(self) -> np.ndarray:
        """Lateral ray offsets in mm, voxel-center convention, symmetric about 0."""
        n = self.n_translations
        return (np.arange(n) - 0.5 * n + 0.5) * self.translation_pitch

    def digest(self) -> str:
        """Short hash identifying the geometry, stored in raster sidecars."""
        canon = "|".join(
            [
                f"{self.bragg_theta:.12e}",
                f"{self.det_distance:.12e}",
                f"{self.pixel_pitch:.12e}",
                f"{self.n_translations:d}",
                f"{self.translation_pitch:.12e}",
                f"{self.rotation_span:.12e}",
                ",".join(f"{a:.12e}" for a in self.rotation_angles),
            ]
        )
        return hashlib.sha1(canon.encode()).hexdigest()[:12]


def lateral_parallax(dx, geom: ScanGeometry):
    """Lateral detector offset dp = dx tan(2 theta), in mm."""
    return np.asarray(dx, dtype=float) * geom.tan_two_theta


def lateral_parallax_pixels(dx, geom: ScanGeometry):
    """Lateral detector offset expressed in detector pixels."""
    return lateral_parallax(dx, geom) / geom.pixel_pitch


def lateral_parallax_angle(dx, geom: ScanGeometry):
    """Lateral detector offset expressed as a Bragg-angle shift, in rad."""
    return lateral_parallax(dx, geom) / geom.det_distance


def angular_parallax(x0, y0, phi, geom: ScanGeometry):
    """Parallax-induced Bragg-angle offset of point (x0, y0) at rotation phi.

    Equals (x0 cos phi + y0 sin phi) tan(2 theta) / z; broadcasts over any
    mix of scalar and array arguments.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return (x0 * np.cos(phi) + y0 * np.sin(phi)) * geom.parallax_coefficient


def mean_parallax(x0, y0, geom: ScanGeometry):
    """Arithmetic mean of angular_parallax over the rotation schedule.

    Vanishes identically for uniform full-turn schedules with two or more
    angles: the discrete averages of cos and sin over a full period are
    exactly zero.
    """
    phi = geom.rotation_angles
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    cos_mean = np.cos(phi).mean()
    sin_mean = np.sin(phi).mean()
    return (x0 * cos_mean + y0 * sin_mean) * geom.parallax_coefficient
