"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` for the per-criterion
report, or `parallax-dxt verify` for the CLI variant of AC-1..AC-6.
"""

import time

import numpy as np
import pytest

from conftest import THETA_321
from parallax_dxt.curves import AngleGrid
from parallax_dxt.forward import (
    curve_stack_moment_sinograms,
    intensity_sinogram,
    moment_sinograms,
    radon,
)
from parallax_dxt.forward import Sinogram
from parallax_dxt.geometry import (
    ScanGeometry,
    lateral_parallax_angle,
    lateral_parallax_pixels,
    mean_parallax,
)
from parallax_dxt.phantom import apply_strain_preset, make_shape
from parallax_dxt.recon import (
    correct_parallax,
    erode_mask,
    fbp,
    interior_metrics,
    reconstruct_mean_strain,
)

PITCH = 0.005


def report(tag, ok, detail):
    line = f"{tag}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def square_phantom(n=200):
    return make_shape("rect", nx=n, ny=n, voxel_pitch=PITCH, width=n * PITCH, height=n * PITCH)


def scan(n=200, n_angles=200, span=2 * np.pi):
    return ScanGeometry.uniform(THETA_321, 800.0, 0.15, n, PITCH, n_angles, span)


def test_ac1_lateral_parallax_magnitude():
    # 2 theta = 14 deg, dx = 0.5 mm, z = 800 mm, 150 um pixels.
    g = ScanGeometry.uniform(np.deg2rad(7.0), 800.0, 0.15, 1, PITCH, 4)
    mrad = float(lateral_parallax_angle(0.5, g)) * 1e3
    px = float(lateral_parallax_pixels(0.5, g))
    ok = abs(mrad - 0.16) <= 0.005 and abs(px - 0.8) <= 0.05
    report("AC-1 lateral parallax magnitude", ok, f"{mrad:.4f} mrad, {px:.3f} px")


def test_ac2_full_turn_mean_parallax_cancels():
    rng = np.random.default_rng(314159)
    worst = 0.0
    for n in (4, 200, 360):
        g = scan(n=1, n_angles=n)
        points = rng.uniform(-0.5, 0.5, size=(100, 2))
        worst = max(worst, float(np.abs(mean_parallax(points[:, 0], points[:, 1], g)).max()))
    report("AC-2 full-turn mean parallax", worst < 1e-12, f"max |mean| = {worst:.2e} rad < 1e-12")


@pytest.mark.parametrize("mode", ["simple", "weighted"])
def test_ac3_parallax_immunity(mode):
    started = time.time()
    g = scan()
    p = square_phantom()
    m0_sino, m1_sino = moment_sinograms(p, g, include_strain=False)
    peak = float(np.abs(m1_sino.values[m1_sino.valid]).max())
    # Sanity of scale: the scan-edge offset is about 1.52e-4 rad.
    assert 0.5 * g.parallax_coefficient == pytest.approx(1.52e-4, abs=0.005e-4)
    threshold = 0.01 * peak
    rec = reconstruct_mean_strain(m0_sino, m1_sino, g, mode=mode, support=p.mask)
    metrics = interior_metrics(rec, np.zeros_like(rec.values), erosion=2)
    elapsed = time.time() - started
    ok = metrics["max_abs"] < threshold and elapsed < 30.0
    report(
        f"AC-3 parallax immunity [{mode}]", ok,
        f"interior max {metrics['max_abs']:.2e} < {threshold:.2e} rad, {elapsed:.1f} s",
    )


def test_ac3_counter_check_half_turn_breaks_immunity():
    g = scan(n_angles=100, span=np.pi)
    p = make_shape("disk", nx=200, ny=200, voxel_pitch=PITCH, radius=0.25, center=(0.15, 0.1))
    m0_sino, m1_sino = moment_sinograms(p, g, include_strain=False)
    threshold = 0.01 * float(np.abs(m1_sino.values[m1_sino.valid]).max())
    rec = reconstruct_mean_strain(m0_sino, m1_sino, g, mode="simple", support=p.mask)
    metrics = interior_metrics(rec, np.zeros_like(rec.values), erosion=2)
    ok = metrics["max_abs"] > threshold
    report(
        "AC-3 counter-check (180 deg violates)", ok,
        f"interior max {metrics['max_abs']:.2e} > {threshold:.2e} rad",
    )


def test_ac4_peen_sign_structure():
    started = time.time()
    g = scan()
    p = apply_strain_preset(
        square_phantom(), "peen",
        sides=("top", "right", "bottom"), depth=0.05, surface_amp=-1.5e-3, bulk_amp=None,
    )
    m0_sino, m1_sino = moment_sinograms(p, g, include_parallax=False)
    rec = reconstruct_mean_strain(m0_sino, m1_sino, g, mode="simple", support=p.mask)
    i = np.arange(200)
    bands = {
        "top": p.mask & (i[None, :] >= 195),
        "right": p.mask & (i[:, None] >= 195),
        "bottom": p.mask & (i[None, :] < 5),
    }
    band_means = {side: float(rec.values[sel].mean()) for side, sel in bands.items()}
    interior = erode_mask(p.mask, 25)
    interior_mean = float(rec.values[interior].mean())
    elapsed = time.time() - started
    ok = all(m < 0 for m in band_means.values()) and interior_mean > 0 and elapsed < 30.0
    report(
        "AC-4 peen sign structure", ok,
        "edge means "
        + ", ".join(f"{side} {band_means[side]:.1e}" for side in bands)
        + f"; interior {interior_mean:.1e} rad, {elapsed:.1f} s",
    )


def test_ac5_additivity_and_correction():
    started = time.time()
    g = scan()
    p = apply_strain_preset(square_phantom(), "uniform", value=1e-4)
    m0_both, m1_both = moment_sinograms(p, g)
    _, m1_par = moment_sinograms(p, g, include_strain=False)
    _, m1_str = moment_sinograms(p, g, include_parallax=False)

    weighted = m0_both.values * m1_both.values
    residual = np.abs(weighted - m0_both.values * m1_par.values - m0_both.values * m1_str.values)
    additivity = float(residual.max()) / float(np.abs(weighted).max())

    corrected = correct_parallax(m0_both, m1_both, g)
    dev = np.abs(corrected.values - m1_str.values)[m1_both.valid]
    correction = float(dev.max()) / float(np.abs(m1_str.values[m1_str.valid]).max())
    elapsed = time.time() - started
    ok = additivity < 1e-10 and correction < 1e-10 and elapsed < 10.0
    report(
        "AC-5 additivity + correction", ok,
        f"residuals {additivity:.1e} / {correction:.1e} < 1e-10, {elapsed:.1f} s",
    )


def test_ac6_curve_stack_oracle_equivalence():
    started = time.time()
    g = scan(n=64, n_angles=64)
    p = apply_strain_preset(
        make_shape("disk", nx=64, ny=64, voxel_pitch=PITCH, radius=0.14),
        "peen", sides=("top", "right"), depth=0.03, surface_amp=-1.2e-3, bulk_amp=None,
    )
    grid = AngleGrid.centered(5e-3, 257)
    m0_fast, m1_fast = moment_sinograms(p, g)
    m0_oracle, m1_oracle = curve_stack_moment_sinograms(p, g, grid, peak_width=2e-4)
    both = m1_fast.valid & m1_oracle.valid
    scale = float(np.abs(m1_fast.values[both]).max())
    rel = float(np.abs(m1_oracle.values - m1_fast.values)[both].max()) / scale
    elapsed = time.time() - started
    ok = both.any() and rel < 1e-3 and elapsed < 60.0
    report("AC-6 oracle equivalence", ok, f"max dev {rel:.1e} rel < 1e-3, {elapsed:.1f} s")


def test_ac7_fbp_round_trip():
    started = time.time()
    g = scan()
    p = make_shape("disk", nx=200, ny=200, voxel_pitch=PITCH, radius=0.35)
    rec = fbp(intensity_sinogram(p, g), g, support=p.mask)
    plateau = rec.values[erode_mask(p.mask, 3)]
    rmse = float(np.sqrt(np.mean((plateau - 1.0) ** 2)))

    impulse = np.zeros((200, 200))
    impulse[140, 60] = 1.0
    sino = radon(impulse, g, PITCH)
    rec_imp = fbp(
        Sinogram(sino, "intensity", g.t_offsets, g.rotation_angles, np.ones(sino.shape, bool)), g
    )
    peak = np.unravel_index(np.argmax(rec_imp.values), rec_imp.values.shape)
    offset = max(abs(peak[0] - 140), abs(peak[1] - 60))
    elapsed = time.time() - started
    ok = rmse < 0.02 and offset <= 1 and elapsed < 10.0
    report(
        "AC-7 FBP round trip", ok,
        f"interior rmse {100 * rmse:.2f}% < 2%, impulse offset {offset} voxel, {elapsed:.1f} s",
    )
