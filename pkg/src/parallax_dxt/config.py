"""Run configuration: flat `key = value` files with [section] headers.

The format is deliberately library-free so any tool can read or write it.
Full-line comments start with '#'. Unknown sections or keys are rejected
with file and line context; values are validated against the module-level
type invariants when the config is resolved into objects. Angles are
degrees in the file and radians everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from parallax_dxt.curves import AngleGrid
from parallax_dxt.errors import ConfigError
from parallax_dxt.geometry import ScanGeometry, uniform_angles
from parallax_dxt.phantom import PhantomSlice, apply_strain_preset, make_shape

_PEEN_SIDES = ("left", "right", "bottom", "top")


@dataclass
class RunConfig:
    """All tunables of a simulation run, with desk-scale defaults.

    Defaults model a representative high-energy scan: the martensite (321)
    reflection (2 theta = 13.678 deg), detector 800 mm downstream with
    150 um pixels, 200 translations at 5 um over a 1 mm sample, 200 angles
    over 360 deg.
    """

    # geometry
    two_theta_deg: float = 13.678
    det_distance_mm: float = 800.0
    pixel_pitch_mm: float = 0.15
    n_angles: int = 200
    span_deg: float = 360.0
    n_translations: int = 200
    translation_pitch_mm: float = 0.005

    # phantom
    shape: str = "rect"
    nx: int = 200
    ny: int = 200
    voxel_pitch_mm: float = 0.005
    rect_width_mm: float = 1.0
    rect_height_mm: float = 1.0
    disk_radius_mm: float = 0.4
    center_x_mm: float = 0.0
    center_y_mm: float = 0.0
    mask_file: str = ""
    preset: str = "none"
    uniform_offset_rad: float = 1e-4
    peen_sides: tuple = ("top", "right", "bottom")
    peen_depth_mm: float = 0.05
    peen_surface_amp_rad: float = -1.5e-3
    peen_bulk_amp_rad: float | None = None  # None = balance total offset to zero

    # curve
    curve_half_span_rad: float = 5e-3
    curve_samples: int = 257
    peak_width_rad: float = 2e-4

    # recon
    recon_mode: str = "simple"
    recon_filter: str = "ramp"
    erosion_voxels: int = 2

    # output
    out_dir: str = "out"
    write_pgm: bool = False

    source: str = field(default="<defaults>", compare=False)


# (section, key) -> (attribute, parser)
def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_sides(raw: str) -> tuple:
    sides = tuple(s.strip() for s in raw.split(",") if s.strip())
    for s in sides:
        if s not in _PEEN_SIDES:
            raise ValueError(f"unknown side {s!r}; expected subset of {_PEEN_SIDES}")
    return sides


def _parse_bulk(raw: str):
    if raw.strip().lower() == "balance":
        return None
    return float(raw)


_SCHEMA: dict[tuple[str, str], tuple[str, object]] = {
    ("geometry", "two_theta_deg"): ("two_theta_deg", float),
    ("geometry", "theta_deg"): ("two_theta_deg", lambda raw: 2.0 * float(raw)),
    ("geometry", "det_distance_mm"): ("det_distance_mm", float),
    ("geometry", "pixel_pitch_mm"): ("pixel_pitch_mm", float),
    ("geometry", "n_angles"): ("n_angles", int),
    ("geometry", "span_deg"): ("span_deg", float),
    ("geometry", "n_translations"): ("n_translations", int),
    ("geometry", "translation_pitch_mm"): ("translation_pitch_mm", float),
    ("phantom", "shape"): ("shape", str),
    ("phantom", "nx"): ("nx", int),
    ("phantom", "ny"): ("ny", int),
    ("phantom", "voxel_pitch_mm"): ("voxel_pitch_mm", float),
    ("phantom", "rect_width_mm"): ("rect_width_mm", float),
    ("phantom", "rect_height_mm"): ("rect_height_mm", float),
    ("phantom", "disk_radius_mm"): ("disk_radius_mm", float),
    ("phantom", "center_x_mm"): ("center_x_mm", float),
    ("phantom", "center_y_mm"): ("center_y_mm", float),
    ("phantom", "mask_file"): ("mask_file", str),
    ("phantom", "preset"): ("preset", str),
    ("phantom", "uniform_offset_rad"): ("uniform_offset_rad", float),
    ("phantom", "peen_sides"): ("peen_sides", _parse_sides),
    ("phantom", "peen_depth_mm"): ("peen_depth_mm", float),
    ("phantom", "peen_surface_amp_rad"): ("peen_surface_amp_rad", float),
    ("phantom", "peen_bulk_amp_rad"): ("peen_bulk_amp_rad", _parse_bulk),
    ("curve", "half_span_rad"): ("curve_half_span_rad", float),
    ("curve", "n_samples"): ("curve_samples", int),
    ("curve", "peak_width_rad"): ("peak_width_rad", float),
    ("recon", "mode"): ("recon_mode", str),
    ("recon", "filter"): ("recon_filter", str),
    ("recon", "erosion_voxels"): ("erosion_voxels", int),
    ("output", "dir"): ("out_dir", str),
    ("output", "pgm"): ("write_pgm", _parse_bool),
}

_SECTIONS = tuple(sorted({sec for sec, _ in _SCHEMA}))


def parse_config(path) -> RunConfig:
    """Parse and validate a config file, applying defaults for absent keys."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = RunConfig(source=str(path))
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"{path}:{lineno}: key before any [section] header")
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        try:
            attr, parser = _SCHEMA[(section, key)]
        except KeyError:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in [{section}]") from None
        try:
            setattr(cfg, attr, parser(raw.strip()))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    _validate(cfg, path)
    return cfg


def _validate(cfg: RunConfig, path) -> None:
    def bad(msg: str):
        return ConfigError(f"{path}: {msg}")

    if not 0.0 < cfg.two_theta_deg < 90.0:
        raise bad(f"two_theta_deg must lie in (0, 90), got {cfg.two_theta_deg}")
    for name in ("det_distance_mm", "pixel_pitch_mm", "translation_pitch_mm", "voxel_pitch_mm"):
        if getattr(cfg, name) <= 0:
            raise bad(f"{name} must be positive")
    for name in ("n_angles", "n_translations", "nx", "ny"):
        if getattr(cfg, name) < 1:
            raise bad(f"{name} must be at least 1")
    if cfg.span_deg <= 0 or cfg.span_deg > 360.0:
        raise bad(f"span_deg must lie in (0, 360], got {cfg.span_deg}")
    if cfg.shape not in ("rect", "disk", "mask_file"):
        raise bad(f"shape must be rect, disk or mask_file, got {cfg.shape!r}")
    if cfg.shape == "mask_file":
        if not cfg.mask_file:
            raise bad("shape = mask_file requires a mask_file path")
        mask_path = Path(cfg.mask_file)
        if not mask_path.is_absolute():
            mask_path = Path(cfg.source).parent / mask_path if cfg.source != "<defaults>" else mask_path
        if not mask_path.exists():
            raise bad(f"mask_file does not exist: {mask_path}")
        cfg.mask_file = str(mask_path)
    if cfg.preset not in ("none", "uniform", "peen"):
        raise bad(f"preset must be none, uniform or peen, got {cfg.preset!r}")
    if cfg.curve_samples < 3 or cfg.curve_samples % 2 == 0:
        raise bad("curve n_samples must be odd and >= 3")
    if cfg.curve_half_span_rad <= 0 or cfg.peak_width_rad <= 0:
        raise bad("curve half_span_rad and peak_width_rad must be positive")
    if cfg.recon_mode not in ("simple", "weighted"):
        raise bad(f"recon mode must be simple or weighted, got {cfg.recon_mode!r}")
    if cfg.recon_filter not in ("ramp", "ramp-cosine"):
        raise bad(f"recon filter must be ramp or ramp-cosine, got {cfg.recon_filter!r}")
    if cfg.erosion_voxels < 0:
        raise bad("erosion_voxels must be non-negative")


def make_geometry(cfg: RunConfig) -> ScanGeometry:
    span = np.deg2rad(cfg.span_deg)
    return ScanGeometry(
        bragg_theta=np.deg2rad(0.5 * cfg.two_theta_deg),
        det_distance=cfg.det_distance_mm,
        pixel_pitch=cfg.pixel_pitch_mm,
        n_translations=cfg.n_translations,
        translation_pitch=cfg.translation_pitch_mm,
        rotation_angles=uniform_angles(cfg.n_angles, span),
        rotation_span=span,
    )


def make_phantom(cfg: RunConfig) -> PhantomSlice:
    kw: dict = dict(nx=cfg.nx, ny=cfg.ny, voxel_pitch=cfg.voxel_pitch_mm)
    if cfg.shape == "rect":
        kw.update(width=cfg.rect_width_mm, height=cfg.rect_height_mm)
    elif cfg.shape == "disk":
        kw.update(radius=cfg.disk_radius_mm)
    else:
        kw.update(mask_file=cfg.mask_file)
    kw.update(center=(cfg.center_x_mm, cfg.center_y_mm))
    p = make_shape(cfg.shape, **kw)
    if cfg.preset == "uniform":
        p = apply_strain_preset(p, "uniform", value=cfg.uniform_offset_rad)
    elif cfg.preset == "peen":
        p = apply_strain_preset(
            p,
            "peen",
            sides=cfg.peen_sides,
            depth=cfg.peen_depth_mm,
            surface_amp=cfg.peen_surface_amp_rad,
            bulk_amp=cfg.peen_bulk_amp_rad,
        )
    return p


def make_angle_grid(cfg: RunConfig) -> AngleGrid:
    return AngleGrid.centered(cfg.curve_half_span_rad, cfg.curve_samples)


def render_config(cfg: RunConfig) -> str:
    """Serialize the fully resolved config (defaults expanded) as file text."""
    bulk = "balance" if cfg.peen_bulk_amp_rad is None else repr(cfg.peen_bulk_amp_rad)
    lines = [
        "[geometry]",
        f"two_theta_deg = {cfg.two_theta_deg!r}",
        f"det_distance_mm = {cfg.det_distance_mm!r}",
        f"pixel_pitch_mm = {cfg.pixel_pitch_mm!r}",
        f"n_angles = {cfg.n_angles}",
        f"span_deg = {cfg.span_deg!r}",
        f"n_translations = {cfg.n_translations}",
        f"translation_pitch_mm = {cfg.translation_pitch_mm!r}",
        "",
        "[phantom]",
        f"shape = {cfg.shape}",
        f"nx = {cfg.nx}",
        f"ny = {cfg.ny}",
        f"voxel_pitch_mm = {cfg.voxel_pitch_mm!r}",
        f"rect_width_mm = {cfg.rect_width_mm!r}",
        f"rect_height_mm = {cfg.rect_height_mm!r}",
        f"disk_radius_mm = {cfg.disk_radius_mm!r}",
        f"center_x_mm = {cfg.center_x_mm!r}",
        f"center_y_mm = {cfg.center_y_mm!r}",
        f"mask_file = {cfg.mask_file}",
        f"preset = {cfg.preset}",
        f"uniform_offset_rad = {cfg.uniform_offset_rad!r}",
        f"peen_sides = {','.join(cfg.peen_sides)}",
        f"peen_depth_mm = {cfg.peen_depth_mm!r}",
        f"peen_surface_amp_rad = {cfg.peen_surface_amp_rad!r}",
        f"peen_bulk_amp_rad = {bulk}",
        "",
        "[curve]",
        f"half_span_rad = {cfg.curve_half_span_rad!r}",
        f"n_samples = {cfg.curve_samples}",
        f"peak_width_rad = {cfg.peak_width_rad!r}",
        "",
        "[recon]",
        f"mode = {cfg.recon_mode}",
        f"filter = {cfg.recon_filter}",
        f"erosion_voxels = {cfg.erosion_voxels}",
        "",
        "[output]",
        f"dir = {cfg.out_dir}",
        f"pgm = {'true' if cfg.write_pgm else 'false'}",
    ]
    return "\n".join(lines) + "\n"
