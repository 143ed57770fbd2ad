# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot-loop kernels; see _kernels_py for the reference semantics."""

from libc.math cimport exp, floor

import numpy as np

cimport numpy as cnp

cnp.import_array()


def project_angle(
    double[:, ::1] field,
    double cos_phi,
    double sin_phi,
    double[::1] t_offsets,
    double[::1] v_offsets,
    double inv_pitch,
    double[::1] out,
):
    """Sums of bilinear field samples along each ray of one projection angle."""
    cdef Py_ssize_t nx = field.shape[0]
    cdef Py_ssize_t ny = field.shape[1]
    cdef Py_ssize_t nt = t_offsets.shape[0]
    cdef Py_ssize_t nv = v_offsets.shape[0]
    cdef Py_ssize_t k, m, i0, j0
    cdef double t, x, y, fi, fj, di, dj, acc, cx, cy
    cx = 0.5 * (nx - 1)
    cy = 0.5 * (ny - 1)
    with nogil:
        for k in range(nt):
            t = t_offsets[k]
            acc = 0.0
            for m in range(nv):
                x = cos_phi * t - sin_phi * v_offsets[m]
                y = sin_phi * t + cos_phi * v_offsets[m]
                fi = x * inv_pitch + cx
                fj = y * inv_pitch + cy
                i0 = <Py_ssize_t>floor(fi)
                j0 = <Py_ssize_t>floor(fj)
                di = fi - i0
                dj = fj - j0
                if 0 <= i0 < nx and 0 <= j0 < ny:
                    acc += field[i0, j0] * (1.0 - di) * (1.0 - dj)
                if 0 <= i0 + 1 < nx and 0 <= j0 < ny:
                    acc += field[i0 + 1, j0] * di * (1.0 - dj)
                if 0 <= i0 < nx and 0 <= j0 + 1 < ny:
                    acc += field[i0, j0 + 1] * (1.0 - di) * dj
                if 0 <= i0 + 1 < nx and 0 <= j0 + 1 < ny:
                    acc += field[i0 + 1, j0 + 1] * di * dj
            out[k] = acc
    return np.asarray(out)


def backproject_block(
    double[:, ::1] filtered,
    double[::1] cosines,
    double[::1] sines,
    double[::1] xs,
    double[::1] ys,
    double t0,
    double inv_step,
    double[:, ::1] out,
    Py_ssize_t row_start,
    Py_ssize_t row_end,
):
    """Accumulate back-projection over an x-row block, angles in index order."""
    cdef Py_ssize_t n_angles = filtered.shape[0]
    cdef Py_ssize_t nt = filtered.shape[1]
    cdef Py_ssize_t ny = ys.shape[0]
    cdef Py_ssize_t i, j, k, b0
    cdef double b, db, acc, tx
    with nogil:
        for i in range(row_start, row_end):
            for j in range(ny):
                acc = out[i, j]
                for k in range(n_angles):
                    b = (xs[i] * cosines[k] + ys[j] * sines[k] - t0) * inv_step
                    b0 = <Py_ssize_t>floor(b)
                    db = b - b0
                    if 0 <= b0 < nt:
                        acc += filtered[k, b0] * (1.0 - db)
                    if 0 <= b0 + 1 < nt:
                        acc += filtered[k, b0 + 1] * db
                out[i, j] = acc
    return np.asarray(out)


def curve_stack_angle(
    double[:, ::1] m0,
    double[:, ::1] strain,
    double cos_phi,
    double sin_phi,
    double[::1] t_offsets,
    double[::1] v_offsets,
    double inv_pitch,
    double parallax_coef,
    double[::1] grid_offsets,
    double peak_width,
    double amp_scale,
    double[:, ::1] out,
):
    """Accumulate summed diffraction curves of one projection angle.

    Gaussians are truncated eight widths out, below double-precision noise
    for the amplitudes involved.
    """
    cdef Py_ssize_t nx = m0.shape[0]
    cdef Py_ssize_t ny = m0.shape[1]
    cdef Py_ssize_t nt = t_offsets.shape[0]
    cdef Py_ssize_t nv = v_offsets.shape[0]
    cdef Py_ssize_t ngrid = grid_offsets.shape[0]
    cdef double gstep = grid_offsets[1] - grid_offsets[0]
    cdef double g0 = grid_offsets[0]
    cdef double inv_two_w2 = 0.5 / (peak_width * peak_width)
    cdef double window = 8.0 * peak_width
    cdef Py_ssize_t k, m, c, g, i0, j0, ii, jj, lo, hi
    cdef double t, x, y, fi, fj, di, dj, w, amp, center, base, d, cx, cy
    cx = 0.5 * (nx - 1)
    cy = 0.5 * (ny - 1)
    out[:, :] = 0.0
    with nogil:
        for k in range(nt):
            t = t_offsets[k]
            base = parallax_coef * t
            for m in range(nv):
                x = cos_phi * t - sin_phi * v_offsets[m]
                y = sin_phi * t + cos_phi * v_offsets[m]
                fi = x * inv_pitch + cx
                fj = y * inv_pitch + cy
                i0 = <Py_ssize_t>floor(fi)
                j0 = <Py_ssize_t>floor(fj)
                di = fi - i0
                dj = fj - j0
                for c in range(4):
                    if c == 0:
                        ii = i0
                        jj = j0
                        w = (1.0 - di) * (1.0 - dj)
                    elif c == 1:
                        ii = i0 + 1
                        jj = j0
                        w = di * (1.0 - dj)
                    elif c == 2:
                        ii = i0
                        jj = j0 + 1
                        w = (1.0 - di) * dj
                    else:
                        ii = i0 + 1
                        jj = j0 + 1
                        w = di * dj
                    if ii < 0 or ii >= nx or jj < 0 or jj >= ny:
                        continue
                    amp = m0[ii, jj] * w * amp_scale
                    if amp <= 0.0:
                        continue
                    center = base + strain[ii, jj]
                    lo = <Py_ssize_t>floor((center - window - g0) / gstep)
                    hi = <Py_ssize_t>floor((center + window - g0) / gstep) + 1
                    if lo < 0:
                        lo = 0
                    if hi > ngrid:
                        hi = ngrid
                    for g in range(lo, hi):
                        d = grid_offsets[g] - center
                        out[k, g] += amp * exp(-(d * d) * inv_two_w2)
    return np.asarray(out)
