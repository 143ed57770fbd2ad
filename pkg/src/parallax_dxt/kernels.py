"""Kernel backend selection and worker-count policy.

The compiled extension (parallax_dxt._kernels, built from _kernels.pyx) is
preferred when importable; otherwise the numpy fallback in _kernels_py is
used. Set PARALLAX_DXT_BACKEND=python to force the fallback, e.g. for the
backend-comparison benchmark. PARALLAX_DXT_THREADS caps the worker count
used by the projection loops (default 1; results are independent of the
worker count by construction).
"""

from __future__ import annotations

import os

if os.environ.get("PARALLAX_DXT_BACKEND", "").strip().lower() == "python":
    from parallax_dxt import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from parallax_dxt import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from parallax_dxt import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

project_angle = _impl.project_angle
backproject_block = _impl.backproject_block
curve_stack_angle = _impl.curve_stack_angle


def thread_count() -> int:
    """Worker cap from PARALLAX_DXT_THREADS; 1 when unset or invalid."""
    raw = os.environ.get("PARALLAX_DXT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(n, 1)
