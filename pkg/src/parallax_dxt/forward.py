"""Forward projection of phantom slices into sinograms.

The projector rotates the field by -phi (bilinear interpolation) and sums
columns, so a sinogram bin is the line integral along t = x cos(phi) +
y sin(phi) scaled by the voxel pitch. Moment sinograms follow the additive
decomposition of un-normalized first moments: the parallax numerator uses
the closed form t * tan(2 theta) / z times the intensity sinogram (exact,
because the parallax offset is constant along each ray), while the strain
numerator projects the per-voxel product field. A slow ray-marching
integrator and a curve-resolved brute-force path are included as oracles.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from parallax_dxt import curves as _curves
from parallax_dxt import kernels
from parallax_dxt.curves import AngleGrid, DiffractionCurve
from parallax_dxt.errors import (
    DegenerateCurve,
    GeometryMismatch,
    NonHomogeneousWarning,
    TruncatedPeak,
)
from parallax_dxt.geometry import ScanGeometry
from parallax_dxt.phantom import PhantomSlice

SINOGRAM_KINDS = ("intensity", "moment1_raw", "moment1_norm")

#: Bins whose intensity falls below this fraction of the maximum are invalid.
DEGENERACY_FLOOR_REL = 1e-9


@dataclass(frozen=True)
class Sinogram:
    """Projected scalar indexed (t, phi) with a per-bin validity mask."""

    values: np.ndarray
    kind: str
    t_offsets: np.ndarray
    angles: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "t_offsets", np.asarray(self.t_offsets, dtype=float))
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float))
        if self.kind not in SINOGRAM_KINDS:
            raise ValueError(f"unknown sinogram kind {self.kind!r}")
        if values.shape != (self.t_offsets.size, self.angles.size):
            raise GeometryMismatch(
                f"sinogram shape {values.shape} does not match "
                f"{self.t_offsets.size} translations x {self.angles.size} angles"
            )
        if valid.shape != values.shape:
            raise GeometryMismatch("validity mask shape differs from values")

    @property
    def n_t(self) -> int:
        return self.t_offsets.size

    @property
    def n_angles(self) -> int:
        return self.angles.size


def ray_sample_offsets(nx: int, ny: int, pitch: float) -> np.ndarray:
    """Sample positions along a ray, covering the grid diagonal.

    The count's parity matches ny so that axis-aligned projections sample
    voxel centers exactly; offsets are symmetric about zero.
    """
    nv = int(np.ceil(np.hypot(nx, ny))) + 2
    nv += (nv + ny) % 2
    return (np.arange(nv) - 0.5 * nv + 0.5) * pitch


def _run_per_angle(geom: ScanGeometry, job) -> None:
    """Run job(angle_index) for every angle, threading when allowed.

    Each job writes a disjoint sinogram column, so results do not depend on
    the worker count.
    """
    n = geom.n_angles
    workers = min(kernels.thread_count(), n)
    if workers <= 1:
        for k in range(n):
            job(k)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, range(n)))


def radon(field: np.ndarray, geom: ScanGeometry, pitch: float) -> np.ndarray:
    """Line integrals of a voxel field along the scan's rays, in mm * field units.

    Returns the raw (n_translations, n_angles) array; use the sinogram
    constructors below for tagged results.
    """
    field = np.ascontiguousarray(field, dtype=float)
    if field.ndim != 2:
        raise GeometryMismatch(f"projection needs a 2-D field, got shape {field.shape}")
    if pitch <= 0:
        raise GeometryMismatch("voxel pitch must be positive")
    nx, ny = field.shape
    ts = geom.t_offsets
    vs = ray_sample_offsets(nx, ny, pitch)
    rows = np.empty((geom.n_angles, ts.size))
    cosines = np.cos(geom.rotation_angles)
    sines = np.sin(geom.rotation_angles)

    def job(k: int) -> None:
        kernels.project_angle(field, cosines[k], sines[k], ts, vs, 1.0 / pitch, rows[k])

    _run_per_angle(geom, job)
    return np.ascontiguousarray(rows.T * pitch)


def radon_ray_oracle(
    field: np.ndarray,
    geom: ScanGeometry,
    pitch: float,
    angle_index: int,
    t_index: int,
    step_fraction: float = 0.25,
) -> float:
    """Brute-force single-ray line integral, marching at step_fraction * pitch.

    Test oracle for the rotate-and-sum projector; integrates the same
    bilinear interpolant with a finer quadrature step.
    """
    field = np.asarray(field, dtype=float)
    nx, ny = field.shape
    phi = geom.rotation_angles[angle_index]
    t = geom.t_offsets[t_index]
    half = 0.5 * np.hypot(nx, ny) * pitch + pitch
    step = step_fraction * pitch
    n = int(np.ceil(2.0 * half / step))
    s = (np.arange(n) - 0.5 * n + 0.5) * step
    x = t * np.cos(phi) - s * np.sin(phi)
    y = t * np.sin(phi) + s * np.cos(phi)
    fi = x / pitch + 0.5 * (nx - 1)
    fj = y / pitch + 0.5 * (ny - 1)
    from parallax_dxt._kernels_py import _bilinear

    return float(_bilinear(field, fi, fj).sum() * step)


def _validity(values: np.ndarray) -> np.ndarray:
    peak = values.max(initial=0.0)
    return values > DEGENERACY_FLOOR_REL * peak


def intensity_sinogram(p: PhantomSlice, geom: ScanGeometry) -> Sinogram:
    """Radon transform of the per-voxel total diffracted intensity."""
    values = radon(p.m0, geom, p.voxel_pitch)
    return Sinogram(values, "intensity", geom.t_offsets, geom.rotation_angles, _validity(values))


def pathlength_sinogram(p: PhantomSlice, geom: ScanGeometry) -> Sinogram:
    """Path length within the sample boundaries for every ray, in mm."""
    values = radon(p.mask.astype(float), geom, p.voxel_pitch)
    return Sinogram(values, "intensity", geom.t_offsets, geom.rotation_angles, _validity(values))


def moment_sinograms(
    p: PhantomSlice,
    geom: ScanGeometry,
    include_parallax: bool = True,
    include_strain: bool = True,
    parallax_per_voxel: bool = False,
):
    """Intensity and normalized first-moment sinograms of a phantom.

    The normalized moment is (parallax numerator + strain numerator) over
    the intensity sinogram, masked where the intensity is degenerate. The
    parallax numerator defaults to the exact closed form
    t * tan(2 theta) / z * R[m0]; parallax_per_voxel=True instead projects
    the per-voxel product field m0 * parallax(x, y, phi) angle by angle,
    which cross-validates the ray-constancy identity at interpolation
    accuracy.
    """
    m0_values = radon(p.m0, geom, p.voxel_pitch)
    valid = _validity(m0_values)
    numer = np.zeros_like(m0_values)
    if include_strain:
        numer += radon(p.m0 * p.strain_offset, geom, p.voxel_pitch)
    if include_parallax:
        if parallax_per_voxel:
            numer += _parallax_numerator_per_voxel(p, geom)
        else:
            numer += geom.parallax_coefficient * geom.t_offsets[:, None] * m0_values
    m1 = np.zeros_like(m0_values)
    np.divide(numer, m0_values, out=m1, where=valid)
    intensity = Sinogram(m0_values, "intensity", geom.t_offsets, geom.rotation_angles, valid)
    moment1 = Sinogram(m1, "moment1_norm", geom.t_offsets, geom.rotation_angles, valid)
    return intensity, moment1


def _parallax_numerator_per_voxel(p: PhantomSlice, geom: ScanGeometry) -> np.ndarray:
    """R[m0 * parallax] with the offset evaluated at voxel positions.

    The product field depends on phi, so each projection angle gets its own
    field; this is the literal, not-a-plain-Radon-transform route.
    """
    X, Y = p.coordinate_grids()
    ts = geom.t_offsets
    vs = ray_sample_offsets(p.nx, p.ny, p.voxel_pitch)
    rows = np.empty((geom.n_angles, ts.size))
    coef = geom.parallax_coefficient
    cosines = np.cos(geom.rotation_angles)
    sines = np.sin(geom.rotation_angles)

    def job(k: int) -> None:
        field = np.ascontiguousarray(p.m0 * (X * cosines[k] + Y * sines[k]) * coef)
        kernels.project_angle(field, cosines[k], sines[k], ts, vs, 1.0 / p.voxel_pitch, rows[k])

    _run_per_angle(geom, job)
    return np.ascontiguousarray(rows.T * p.voxel_pitch)


def parallax_sinogram(p: PhantomSlice, geom: ScanGeometry) -> Sinogram:
    """Normalized first-moment sinogram of parallax alone (strain off).

    Computed on the homogenized support, where it reduces to
    R[parallax] / R[pathlength]; warns when the phantom intensity is not
    constant over the mask.
    """
    if not p.is_homogeneous(rtol=1e-6):
        warnings.warn(
            "phantom intensity is not homogeneous; parallax sinogram uses the homogenized support",
            NonHomogeneousWarning,
            stacklevel=2,
        )
    _, m1 = moment_sinograms(p.homogenized(), geom, include_parallax=True, include_strain=False)
    return m1


def moment1_weighted(m0_sino: Sinogram, m1norm_sino: Sinogram) -> Sinogram:
    """Un-normalized first-moment sinogram M0 * M1bar (a true line integral)."""
    values = m0_sino.values * m1norm_sino.values
    return Sinogram(
        values,
        "moment1_raw",
        m0_sino.t_offsets,
        m0_sino.angles,
        m0_sino.valid & m1norm_sino.valid,
    )


def poissonize_intensity(s: Sinogram, dose: float, seed: int = 0) -> Sinogram:
    """Experimental: resample an intensity sinogram with Poisson statistics.

    Bin values are scaled so the peak corresponds to `dose` expected counts,
    drawn, and scaled back. Validity is re-derived from the noisy values.
    """
    if s.kind != "intensity":
        raise ValueError("Poisson scaling applies to intensity sinograms only")
    if dose <= 0:
        raise ValueError("dose must be positive")
    peak = float(s.values.max(initial=0.0))
    if peak == 0.0:
        return s
    rng = np.random.default_rng(seed)
    noisy = rng.poisson(s.values * (dose / peak)) * (peak / dose)
    return Sinogram(noisy, "intensity", s.t_offsets, s.angles, _validity(noisy))


@dataclass(frozen=True)
class CurveStack:
    """Fully resolved observable curves, one per (t, phi) bin."""

    grid: AngleGrid
    curves: np.ndarray  # (n_t, n_angles, n_grid)
    t_offsets: np.ndarray
    angles: np.ndarray

    def curve(self, t_index: int, angle_index: int) -> DiffractionCurve:
        return DiffractionCurve(self.grid, self.curves[t_index, angle_index])


def _check_curve_stack_inputs(p, geom, grid, peak_width, include_parallax, include_strain):
    if peak_width < 3.0 * grid.step:
        raise ValueError(
            f"peak width {peak_width:g} under-samples the angle grid (step {grid.step:g})"
        )
    max_center = 0.0
    if include_parallax:
        max_center += float(np.abs(geom.t_offsets).max()) * geom.parallax_coefficient
    if include_strain and p.mask.any():
        max_center += float(np.abs(p.strain_offset[p.mask]).max())
    if max_center + 3.0 * peak_width > grid.half_span:
        warnings.warn(
            f"local offsets up to {max_center:g} rad approach the grid edge",
            TruncatedPeak,
            stacklevel=3,
        )


def iter_curve_stack(
    p: PhantomSlice,
    geom: ScanGeometry,
    grid: AngleGrid,
    peak_width: float,
    include_parallax: bool = True,
    include_strain: bool = True,
):
    """Yield (angle_index, curves) pages of the observable curve stack.

    Each page holds the summed local diffraction curves of one projection
    angle, shaped (n_translations, grid.n_samples). Pages are generated
    streamingly so the full stack is never materialized here. Peaks are
    scaled so that moment0 of each curve approximates the intensity
    sinogram bin.
    """
    _check_curve_stack_inputs(p, geom, grid, peak_width, include_parallax, include_strain)
    m0 = np.ascontiguousarray(p.m0)
    strain = np.ascontiguousarray(p.strain_offset if include_strain else np.zeros_like(p.m0))
    ts = geom.t_offsets
    vs = ray_sample_offsets(p.nx, p.ny, p.voxel_pitch)
    coef = geom.parallax_coefficient if include_parallax else 0.0
    amp_scale = p.voxel_pitch / (peak_width * np.sqrt(2.0 * np.pi))

    def pages():
        for k in range(geom.n_angles):
            phi = geom.rotation_angles[k]
            page = np.empty((ts.size, grid.n_samples))
            kernels.curve_stack_angle(
                m0,
                strain,
                np.cos(phi),
                np.sin(phi),
                ts,
                vs,
                1.0 / p.voxel_pitch,
                coef,
                grid.offsets,
                peak_width,
                amp_scale,
                page,
            )
            yield k, page

    return pages()


def simulate_curve_stack(
    p: PhantomSlice,
    geom: ScanGeometry,
    grid: AngleGrid,
    peak_width: float,
    include_parallax: bool = True,
    include_strain: bool = True,
) -> CurveStack:
    """Materialize the full curve stack (small problems only; see iter_curve_stack)."""
    stack = np.empty((geom.n_translations, geom.n_angles, grid.n_samples))
    for k, page in iter_curve_stack(p, geom, grid, peak_width, include_parallax, include_strain):
        stack[:, k, :] = page
    return CurveStack(grid, stack, geom.t_offsets, geom.rotation_angles)


def curve_stack_moment_sinograms(
    p: PhantomSlice,
    geom: ScanGeometry,
    grid: AngleGrid,
    peak_width: float,
    include_parallax: bool = True,
    include_strain: bool = True,
):
    """Moment sinograms measured from the brute-force curve stack.

    Runs the streaming stack and feeds every bin's curve through the moment
    analyzers; bins whose curve is degenerate are masked. This is the
    independent oracle for moment_sinograms.
    """
    nt = geom.n_translations
    m0_values = np.zeros((nt, geom.n_angles))
    m1_values = np.zeros_like(m0_values)
    valid = np.zeros(m0_values.shape, dtype=bool)
    for k, page in iter_curve_stack(p, geom, grid, peak_width, include_parallax, include_strain):
        for it in range(nt):
            curve = DiffractionCurve(grid, page[it])
            m0_values[it, k] = _curves.moment0(curve)
            try:
                m1_values[it, k] = _curves.moment1(curve)
            except DegenerateCurve:
                continue
            valid[it, k] = True
    intensity = Sinogram(m0_values, "intensity", geom.t_offsets, geom.rotation_angles, valid)
    moment1 = Sinogram(m1_values, "moment1_norm", geom.t_offsets, geom.rotation_angles, valid)
    return intensity, moment1
