"""Grid raster file format and PGM import/export.

A raster is a binary payload of 32-bit little-endian IEEE-754 floats in
row-major order, paired with a plain-text sidecar header (same basename,
.meta suffix) of `key = value` lines. The sidecar always carries nrows,
ncols and dtype; callers add axis semantics, units, kind and geometry
digest. PGM (P2/P5) is read for mask files and written, min-max scaled,
for eyeballing results.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from parallax_dxt.errors import RasterError

_DTYPE_TAG = "float32-le"


def meta_path(path) -> Path:
    return Path(path).with_suffix(".meta")


def write_raster(path, values, meta: dict | None = None) -> Path:
    """Write a 2-D array as float32-le payload plus sidecar; returns the path."""
    path = Path(path)
    values = np.asarray(values)
    if values.ndim != 2:
        raise RasterError(f"raster payload must be 2-D, got shape {values.shape}")
    header = {
        "nrows": values.shape[0],
        "ncols": values.shape[1],
        "dtype": _DTYPE_TAG,
    }
    if meta:
        for key, val in meta.items():
            if key in header and str(val) != str(header[key]):
                raise RasterError(f"meta key {key!r} conflicts with payload shape")
            header[key] = val
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(values, dtype="<f4").tobytes())
    lines = [f"{key} = {val}" for key, val in header.items()]
    meta_path(path).write_text("\n".join(lines) + "\n")
    return path


def read_raster(path):
    """Read a raster written by write_raster; returns (float64 array, meta dict)."""
    path = Path(path)
    side = meta_path(path)
    if not path.exists():
        raise RasterError(f"raster payload missing: {path}")
    if not side.exists():
        raise RasterError(f"raster sidecar missing: {side}")
    meta: dict[str, str] = {}
    for lineno, line in enumerate(side.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RasterError(f"{side}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    try:
        nrows = int(meta["nrows"])
        ncols = int(meta["ncols"])
    except (KeyError, ValueError) as exc:
        raise RasterError(f"{side}: missing or invalid nrows/ncols") from exc
    if meta.get("dtype", _DTYPE_TAG) != _DTYPE_TAG:
        raise RasterError(f"{side}: unsupported dtype {meta.get('dtype')!r}")
    payload = path.read_bytes()
    if len(payload) != nrows * ncols * 4:
        raise RasterError(
            f"{path}: payload is {len(payload)} bytes, expected {nrows * ncols * 4}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(nrows, ncols)
    return values.astype(np.float64), meta


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM file as a 2-D integer array (rows x cols)."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise RasterError(f"{path}: not a P2/P5 PGM file")
    binary = data[:2] == b"P5"

    # Header tokens (magic, width, height, maxval) with '#' comments allowed.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise RasterError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1 or maxval < 1:
        raise RasterError(f"{path}: malformed PGM header")

    if binary:
        pos += 1  # single whitespace byte after maxval
        itemsize = 1 if maxval < 256 else 2
        nbytes = width * height * itemsize
        raw = data[pos : pos + nbytes]
        if len(raw) != nbytes:
            raise RasterError(f"{path}: truncated PGM payload")
        dtype = np.uint8 if itemsize == 1 else ">u2"
        pixels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        try:
            pixels = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise RasterError(f"{path}: malformed P2 payload") from exc
        if pixels.size != width * height:
            raise RasterError(f"{path}: P2 payload has {pixels.size} values, expected {width * height}")
    return pixels.reshape(height, width)


def write_pgm(path, values, comment: str | None = None) -> Path:
    """Write a 2-D array as 8-bit P5 PGM, min-max scaled; scale goes in a comment."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise RasterError("PGM export needs a 2-D array")
    lo = float(values.min())
    hi = float(values.max())
    scale = hi - lo
    if scale == 0.0:
        scaled = np.zeros_like(values)
    else:
        scaled = (values - lo) / scale
    pixels = np.round(scaled * 255).astype(np.uint8)
    header = f"P5\n# min = {lo:.9e} max = {hi:.9e}\n"
    if comment:
        header += f"# {comment}\n"
    header += f"{values.shape[1]} {values.shape[0]}\n255\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(pixels.tobytes())
    return path
