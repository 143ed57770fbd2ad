"""Pure-numpy implementations of the hot-loop kernels.

Drop-in equivalents of the compiled extension module, selected at import
time by parallax_dxt.kernels when the extension is unavailable. Sampling
conventions: fields are indexed [i, j] with world position
x = (i - (n-1)/2) * pitch; samples outside the grid contribute zero.
"""

from __future__ import annotations

import numpy as np


def _pad_zero(field):
    """Field embedded in a one-voxel zero border, plus its flat view."""
    nx, ny = field.shape
    padded = np.zeros((nx + 2, ny + 2))
    padded[1:-1, 1:-1] = field
    return padded.ravel(), ny + 2


def _bilinear(field, fi, fj):
    """Bilinear interpolation at fractional indices (fi, fj), zero outside.

    Out-of-grid corners land on the zero border of a padded copy, which
    avoids per-corner validity masks. Fractional indices are clipped into
    [-1, n] first; the resulting border samples carry zero value, so far-out
    rays contribute exactly zero. Border clamping perturbs di/dj only where
    the corner value is zero, leaving in-grid results untouched.
    """
    nx, ny = field.shape
    flat, stride = _pad_zero(field)
    fi = np.clip(fi, -1.0, float(nx))
    fj = np.clip(fj, -1.0, float(ny))
    # +1 shifts into the padded frame and makes truncation match floor.
    i1 = np.minimum((fi + 1.0).astype(np.intp), nx)
    j1 = np.minimum((fj + 1.0).astype(np.intp), ny)
    di = fi - i1
    di += 1.0
    dj = fj - j1
    dj += 1.0
    idx = i1 * stride
    idx += j1
    wj1 = 1.0 - dj
    top = np.take(flat, idx) * wj1 + np.take(flat, idx + 1) * dj
    idx += stride
    bottom = np.take(flat, idx) * wj1 + np.take(flat, idx + 1) * dj
    return (1.0 - di) * top + di * bottom


def project_angle(field, cos_phi, sin_phi, t_offsets, v_offsets, inv_pitch, out):
    """Sums of bilinear field samples along each ray of one projection angle.

    Ray k runs through lab points (x, y) = (t_k c - v s, t_k s + v c) for v
    over v_offsets; out[k] receives the plain sample sum (no pitch scaling).
    """
    nx, ny = field.shape
    # Outer sums: fi/fj each cost one full-size broadcast operation.
    fi = (cos_phi * inv_pitch * t_offsets + 0.5 * (nx - 1))[:, None] \
        - (sin_phi * inv_pitch * v_offsets)[None, :]
    fj = (sin_phi * inv_pitch * t_offsets + 0.5 * (ny - 1))[:, None] \
        + (cos_phi * inv_pitch * v_offsets)[None, :]
    out[:] = _bilinear(field, fi, fj).sum(axis=1)
    return out


def backproject_block(filtered, cosines, sines, xs, ys, t0, inv_step, out, row_start, row_end):
    """Accumulate back-projection of filtered projections over an x-row block.

    filtered has shape (n_angles, n_t); each voxel linearly interpolates the
    angle's profile at t = x cos + y sin, summing over angles in index order
    (fixed accumulation order keeps results independent of row blocking).
    """
    nt = filtered.shape[1]
    xs_blk = xs[row_start:row_end, np.newaxis]
    acc = out[row_start:row_end]
    for k in range(filtered.shape[0]):
        b = (xs_blk * cosines[k] + ys[np.newaxis, :] * sines[k] - t0) * inv_step
        b0 = np.floor(b).astype(np.intp)
        db = b - b0
        row = filtered[k]
        ok0 = (b0 >= 0) & (b0 < nt)
        ok1 = (b0 + 1 >= 0) & (b0 + 1 < nt)
        acc += row[np.clip(b0, 0, nt - 1)] * ((1.0 - db) * ok0)
        acc += row[np.clip(b0 + 1, 0, nt - 1)] * (db * ok1)
    return out


def curve_stack_angle(
    m0,
    strain,
    cos_phi,
    sin_phi,
    t_offsets,
    v_offsets,
    inv_pitch,
    parallax_coef,
    grid_offsets,
    peak_width,
    amp_scale,
    out,
):
    """Accumulate the summed diffraction curves of one projection angle.

    For every ray sample the four neighbouring voxels contribute Gaussian
    peaks with amplitude (bilinear weight * m0 * amp_scale), centered at the
    ray's parallax offset t * parallax_coef plus the voxel's strain offset.
    out has shape (n_t, n_grid) and is overwritten.
    """
    nx, ny = m0.shape
    inv_two_w2 = 0.5 / (peak_width * peak_width)
    x = cos_phi * t_offsets[:, None] - sin_phi * v_offsets[None, :]
    y = sin_phi * t_offsets[:, None] + cos_phi * v_offsets[None, :]
    fi = x * inv_pitch + 0.5 * (nx - 1)
    fj = y * inv_pitch + 0.5 * (ny - 1)
    i0 = np.floor(fi).astype(np.intp)
    j0 = np.floor(fj).astype(np.intp)
    di = fi - i0
    dj = fj - j0

    corners = (
        (i0, j0, (1.0 - di) * (1.0 - dj)),
        (i0 + 1, j0, di * (1.0 - dj)),
        (i0, j0 + 1, (1.0 - di) * dj),
        (i0 + 1, j0 + 1, di * dj),
    )
    amps = []
    cents = []
    for ii, jj, w in corners:
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        ic = np.clip(ii, 0, nx - 1)
        jc = np.clip(jj, 0, ny - 1)
        amps.append(m0[ic, jc] * (w * ok) * amp_scale)
        cents.append(strain[ic, jc])
    amp = np.stack(amps, axis=-1).reshape(t_offsets.size, -1)
    cent = np.stack(cents, axis=-1).reshape(t_offsets.size, -1)

    out[:] = 0.0
    for k in range(t_offsets.size):
        keep = amp[k] > 0.0
        if not keep.any():
            continue
        centers = cent[k, keep] + parallax_coef * t_offsets[k]
        d = grid_offsets[np.newaxis, :] - centers[:, np.newaxis]
        out[k] = (amp[k, keep][:, np.newaxis] * np.exp(-(d * d) * inv_two_w2)).sum(axis=0)
    return out
