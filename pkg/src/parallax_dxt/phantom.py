"""Voxelized 2-D sample slices: diffracted intensity, strain offsets, support.

Arrays are indexed [i, j] with i along x and j along y; the rotation axis
sits at the grid center, so voxel (i, j) has world coordinates
x = (i - nx/2 + 1/2) * pitch and y likewise. Strain is stored as the
angular offset it imprints on the diffraction curve (rad), not as a
dimensionless lattice strain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from parallax_dxt import gridio
from parallax_dxt.errors import EmptyPhantom, OutsideSupport, ShapeOutOfBounds, UnknownPreset
from parallax_dxt.geometry import ScanGeometry, angular_parallax

_SIDES = ("left", "right", "bottom", "top")


def axis_coords(n: int, pitch: float) -> np.ndarray:
    """Voxel-center world coordinates along one axis, symmetric about 0."""
    return (np.arange(n) - 0.5 * n + 0.5) * pitch


@dataclass(frozen=True)
class PhantomSlice:
    """Per-voxel total diffracted intensity, strain offset and support mask."""

    m0: np.ndarray
    strain_offset: np.ndarray
    mask: np.ndarray
    voxel_pitch: float

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=float)
        strain = np.asarray(self.strain_offset, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "strain_offset", strain)
        object.__setattr__(self, "mask", mask)
        if m0.ndim != 2 or m0.shape != strain.shape or m0.shape != mask.shape:
            raise ValueError("m0, strain_offset and mask must share one 2-D shape")
        if self.voxel_pitch <= 0:
            raise ValueError("voxel_pitch must be positive")
        if np.any(m0 < 0):
            raise ValueError("m0 must be non-negative")
        outside = ~mask
        if np.any(m0[outside] != 0.0) or np.any(strain[outside] != 0.0):
            raise ValueError("m0 and strain_offset must vanish outside the mask")

    @property
    def nx(self) -> int:
        return self.m0.shape[0]

    @property
    def ny(self) -> int:
        return self.m0.shape[1]

    @property
    def x_coords(self) -> np.ndarray:
        return axis_coords(self.nx, self.voxel_pitch)

    @property
    def y_coords(self) -> np.ndarray:
        return axis_coords(self.ny, self.voxel_pitch)

    def coordinate_grids(self):
        """World coordinates (X, Y), each shaped (nx, ny)."""
        return np.meshgrid(self.x_coords, self.y_coords, indexing="ij")

    def is_homogeneous(self, rtol: float = 1e-9) -> bool:
        """True when m0 is constant over the support."""
        inside = self.m0[self.mask]
        if inside.size == 0:
            return True
        return bool(np.ptp(inside) <= rtol * max(abs(inside.max()), 1e-300))

    def homogenized(self) -> "PhantomSlice":
        """Same support with unit intensity and zero strain."""
        return PhantomSlice(
            m0=self.mask.astype(float),
            strain_offset=np.zeros_like(self.m0),
            mask=self.mask,
            voxel_pitch=self.voxel_pitch,
        )


def make_shape(
    kind: str,
    *,
    nx: int = 200,
    ny: int = 200,
    voxel_pitch: float = 0.005,
    width: float | None = None,
    height: float | None = None,
    radius: float | None = None,
    center: tuple[float, float] = (0.0, 0.0),
    mask_file=None,
) -> PhantomSlice:
    """Homogeneous phantom (m0 = 1 inside, zero strain) with the given support.

    kind is one of 'rect', 'disk' or 'mask_file'. Lengths are mm in world
    coordinates; for mask_file the grid dimensions come from the PGM file
    (nonzero = inside) and only voxel_pitch applies.
    """
    cx, cy = center
    if kind == "mask_file":
        if mask_file is None:
            raise ValueError("mask_file kind requires a path")
        raster = gridio.read_pgm(mask_file)
        # PGM rows scan top-to-bottom; flip so j increases with +y,
        # then transpose to the [i, j] = [x, y] layout.
        mask = (raster[::-1].T != 0)
    elif kind == "rect":
        if width is None or height is None:
            raise ValueError("rect kind requires width and height")
        half_w, half_h = 0.5 * width, 0.5 * height
        ext_x, ext_y = 0.5 * nx * voxel_pitch, 0.5 * ny * voxel_pitch
        if abs(cx) + half_w > ext_x or abs(cy) + half_h > ext_y:
            raise ShapeOutOfBounds(
                f"rect {width} x {height} mm at ({cx}, {cy}) exceeds the {2 * ext_x} x {2 * ext_y} mm grid"
            )
        x = axis_coords(nx, voxel_pitch)
        y = axis_coords(ny, voxel_pitch)
        mask = (np.abs(x - cx)[:, None] <= half_w) & (np.abs(y - cy)[None, :] <= half_h)
    elif kind == "disk":
        if radius is None:
            raise ValueError("disk kind requires a radius")
        ext = 0.5 * min(nx, ny) * voxel_pitch
        if np.hypot(cx, cy) + radius > ext:
            raise ShapeOutOfBounds(f"disk radius {radius} mm at ({cx}, {cy}) exceeds the grid")
        x = axis_coords(nx, voxel_pitch)
        y = axis_coords(ny, voxel_pitch)
        mask = (x - cx)[:, None] ** 2 + (y - cy)[None, :] ** 2 <= radius**2
    else:
        raise ValueError(f"unknown shape kind {kind!r}")

    if not mask.any():
        warnings.warn("phantom mask is empty", EmptyPhantom, stacklevel=2)
    return PhantomSlice(
        m0=mask.astype(float),
        strain_offset=np.zeros(mask.shape),
        mask=mask,
        voxel_pitch=voxel_pitch,
    )


def _edge_distance(mask: np.ndarray, side: str, pitch: float) -> np.ndarray:
    """Per-voxel distance (mm) from the mask surface on the given side.

    Measured along the axis normal to that side, from the first masked
    voxel of each row/column; +inf where the lane is empty.
    """
    nx, ny = mask.shape
    dist = np.full(mask.shape, np.inf)
    if side == "left":
        idx = np.arange(nx)[:, None] - np.argmax(mask, axis=0)[None, :]
    elif side == "right":
        idx = (nx - 1 - np.argmax(mask[::-1], axis=0))[None, :] - np.arange(nx)[:, None]
    elif side == "bottom":
        idx = np.arange(ny)[None, :] - np.argmax(mask, axis=1)[:, None]
    elif side == "top":
        idx = (ny - 1 - np.argmax(mask[:, ::-1], axis=1))[:, None] - np.arange(ny)[None, :]
    else:
        raise UnknownPreset(f"unknown peen side {side!r}; expected one of {_SIDES}")
    lane_has_mask = mask.any(axis=0)[None, :] if side in ("left", "right") else mask.any(axis=1)[:, None]
    np.copyto(dist, idx * pitch, where=mask & lane_has_mask)
    return dist


def apply_strain_preset(p: PhantomSlice, preset: str, **params) -> PhantomSlice:
    """Return a copy of p with the named strain field applied inside the mask.

    'uniform' takes value (rad). 'peen' takes sides (iterable of left /
    right / bottom / top), depth (mm), surface_amp (rad, negative for the
    compressive surface layer) and bulk_amp (rad, or None to balance the
    total offset over the mask to zero); side contributions superpose
    where treated edges meet.
    """
    if preset == "uniform":
        value = params.pop("value")
        if params:
            raise UnknownPreset(f"unexpected uniform parameters: {sorted(params)}")
        strain = np.where(p.mask, float(value), 0.0)
    elif preset == "peen":
        sides = tuple(params.pop("sides", ("top", "right", "bottom")))
        depth = float(params.pop("depth", 0.05))
        surface_amp = float(params.pop("surface_amp", -1.5e-3))
        bulk_amp = params.pop("bulk_amp", None)
        if params:
            raise UnknownPreset(f"unexpected peen parameters: {sorted(params)}")
        if depth <= 0:
            raise ValueError("peen depth must be positive")
        surface = np.zeros(p.mask.shape)
        for side in sides:
            d = _edge_distance(p.mask, side, p.voxel_pitch)
            contrib = np.where(np.isfinite(d), surface_amp * np.exp(-d / depth), 0.0)
            surface += contrib
        n_inside = int(p.mask.sum())
        if bulk_amp is None:
            bulk = -surface[p.mask].sum() / n_inside if n_inside else 0.0
        else:
            bulk = float(bulk_amp)
        strain = np.where(p.mask, surface + bulk, 0.0)
    else:
        raise UnknownPreset(f"unknown strain preset {preset!r}")
    return PhantomSlice(p.m0, strain, p.mask, p.voxel_pitch)


def local_offset(p: PhantomSlice, i: int, j: int, phi: float, geom: ScanGeometry) -> float:
    """Total curve offset of voxel (i, j) at rotation phi: parallax plus strain."""
    if not p.mask[i, j]:
        raise OutsideSupport(f"voxel ({i}, {j}) lies outside the support mask")
    return float(angular_parallax(p.x_coords[i], p.y_coords[j], phi, geom) + p.strain_offset[i, j])
