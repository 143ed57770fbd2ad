#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-numpy fallback.

Times the three hot kernels at desk scale through the public forward and
recon entry points, once per backend, and prints a comparison table.

    python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run_backend(backend: str, repeats: int) -> dict:
    import os

    os.environ["PARALLAX_DXT_BACKEND"] = backend
    import parallax_dxt.kernels as kernels

    importlib.reload(kernels)
    import parallax_dxt.forward as forward
    import parallax_dxt.recon as recon

    importlib.reload(forward)
    importlib.reload(recon)
    if kernels.BACKEND != backend:
        raise SystemExit(f"backend {backend!r} unavailable (got {kernels.BACKEND})")

    from parallax_dxt.curves import AngleGrid
    from parallax_dxt.geometry import ScanGeometry
    from parallax_dxt.phantom import apply_strain_preset, make_shape

    theta = np.deg2rad(6.839)
    pitch = 0.005

    g200 = ScanGeometry.uniform(theta, 800.0, 0.15, 200, pitch, 200)
    p200 = make_shape("rect", nx=200, ny=200, voxel_pitch=pitch, width=1.0, height=1.0)
    sino = forward.intensity_sinogram(p200, g200)

    g64 = ScanGeometry.uniform(theta, 800.0, 0.15, 64, pitch, 64)
    p64 = apply_strain_preset(
        make_shape("disk", nx=64, ny=64, voxel_pitch=pitch, radius=0.14),
        "peen", sides=("top", "right"), depth=0.03, surface_amp=-1.2e-3, bulk_amp=None,
    )
    grid = AngleGrid.centered(5e-3, 257)

    return {
        "radon 200^2 x 200": best_of(lambda: forward.radon(p200.m0, g200, pitch), repeats),
        "fbp 200^2 x 200": best_of(lambda: recon.fbp(sino, g200), repeats),
        "curve stack 64^2 x 64": best_of(
            lambda: forward.curve_stack_moment_sinograms(p64, g64, grid, 2e-4), repeats
        ),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    results = {}
    for backend in ("cython", "python"):
        try:
            results[backend] = run_backend(backend, args.repeats)
        except SystemExit as exc:
            print(exc)
    if "cython" not in results:
        print("compiled backend missing; build it with: python setup.py build_ext --inplace")
        return

    names = list(next(iter(results.values())))
    width = max(len(n) for n in names)
    print(f"{'kernel'.ljust(width)}  {'cython':>10}  {'python':>10}  {'speedup':>8}")
    for name in names:
        c = results["cython"][name]
        p = results.get("python", {}).get(name, float("nan"))
        print(f"{name.ljust(width)}  {c * 1e3:>8.1f} ms  {p * 1e3:>8.1f} ms  {p / c:>7.1f}x")


if __name__ == "__main__":
    main()
