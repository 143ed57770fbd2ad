"""End-to-end command-line tests: the external interface of the package."""

import numpy as np
import pytest

from parallax_dxt.cli import main
from parallax_dxt.gridio import read_raster

SMALL = """
[geometry]
n_angles = 48
n_translations = 48

[phantom]
shape = disk
nx = 48
ny = 48
disk_radius_mm = 0.1
preset = uniform
uniform_offset_rad = 2e-4
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return str(path)


def run(*argv):
    return main(list(argv))


class TestPhantomCommand:
    def test_writes_rasters_and_echo(self, tmp_path):
        out = tmp_path / "out"
        assert run("phantom", "--out", str(out)) == 0
        for name in ("phantom_m0", "phantom_strain", "phantom_mask"):
            values, meta = read_raster(out / f"{name}.f32")
            assert values.shape == (200, 200)
            assert "geometry_digest" in meta
        assert (out / "run_config.txt").exists()

    def test_bad_key_exits_two(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[geometry]\nn_angels = 7\n")
        assert run("phantom", "--config", str(cfg), "--out", str(tmp_path / "o")) == 2
        assert "n_angels" in capsys.readouterr().err

    def test_mask_file_dimensions_respected(self, tmp_path):
        pgm = tmp_path / "shape.pgm"
        pgm.write_text("P2\n5 3\n255\n" + "1 " * 15)
        cfg = tmp_path / "m.cfg"
        cfg.write_text(f"[phantom]\nshape = mask_file\nmask_file = {pgm}\n")
        out = tmp_path / "out"
        assert run("phantom", "--config", str(cfg), "--out", str(out)) == 0
        values, _ = read_raster(out / "phantom_mask.f32")
        assert values.shape == (5, 3)

    def test_pgm_export_flag(self, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("[output]\npgm = true\n")
        out = tmp_path / "out"
        assert run("phantom", "--config", str(cfg), "--out", str(out)) == 0
        assert (out / "phantom_m0.pgm").exists()


class TestParallaxMapCommand:
    def _map(self, tmp_path, phi):
        out = tmp_path / f"map{phi}"
        assert run("parallax-map", "--phi", str(phi), "--out", str(out)) == 0
        values, _ = read_raster(out / "parallax_map_rad.f32")
        pixels, _ = read_raster(out / "parallax_map_pixels.f32")
        return values, pixels

    def test_zero_angle_linear_in_x(self, tmp_path):
        values, pixels = self._map(tmp_path, 0.0)
        assert np.ptp(values, axis=1).max() == 0.0  # constant in y
        col = values[:, 0]
        steps = np.diff(col)
        np.testing.assert_allclose(steps, steps[0], rtol=1e-5)
        # pixel map relates by z / pixel_pitch
        np.testing.assert_allclose(pixels, values * 800.0 / 0.15, rtol=1e-5)

    def test_quarter_turn_linear_in_y(self, tmp_path):
        values, _ = self._map(tmp_path, 90.0)
        assert np.ptp(values, axis=0).max() < 1e-12 * np.abs(values).max()

    def test_oblique_angle_level_sets(self, tmp_path):
        values, _ = self._map(tmp_path, 20.0)
        phi = np.deg2rad(20.0)
        x = (np.arange(200) - 99.5) * 0.005
        expected = (x[:, None] * np.cos(phi) + x[None, :] * np.sin(phi)) \
            * np.tan(np.deg2rad(13.678)) / 800.0
        np.testing.assert_allclose(values, expected, rtol=1e-5, atol=1e-12)


class TestSinogramCommand:
    def test_parallax_columns_constant_over_phi(self, tmp_path, small_cfg):
        out = tmp_path / "sino"
        assert run("sinogram", "--config", small_cfg, "--parallax", "--out", str(out)) == 0
        m1, _ = read_raster(out / "sino_m1norm.f32")
        valid, _ = read_raster(out / "sino_valid.f32")
        rows = (valid != 0).all(axis=1)
        assert rows.any()
        assert np.ptp(m1[rows], axis=1).max() < 1e-7 * np.abs(m1).max()

    def test_additivity_residual_raster(self, tmp_path, small_cfg, capsys):
        out = tmp_path / "sino"
        assert run("sinogram", "--config", small_cfg, "--parallax", "--strain", "--out", str(out)) == 0
        residual, _ = read_raster(out / "additivity_residual.f32")
        m0, _ = read_raster(out / "sino_m0.f32")
        m1, _ = read_raster(out / "sino_m1norm.f32")
        scale = np.abs(m0 * m1).max()
        assert np.abs(residual).max() < 1e-10 * scale
        assert "additivity residual" in capsys.readouterr().out

    def test_oracle_discrepancy_and_curves(self, tmp_path, small_cfg, capsys):
        out = tmp_path / "sino"
        assert run("sinogram", "--config", small_cfg, "--oracle", "--dump-curves", "2",
                   "--out", str(out)) == 0
        disc, _ = read_raster(out / "oracle_discrepancy.f32")
        m1, _ = read_raster(out / "sino_m1norm.f32")
        assert disc.max() < 1e-3 * np.abs(m1).max()
        dumped = sorted(out.glob("curve_t*_phi*.txt"))
        assert len(dumped) == 2
        assert np.loadtxt(dumped[0]).shape[1] == 2


class TestReconstructCommand:
    def test_parallax_immunity_check_passes(self, tmp_path, small_cfg):
        sino_dir = tmp_path / "sino"
        out = tmp_path / "rec"
        assert run("sinogram", "--config", small_cfg, "--parallax", "--out", str(sino_dir)) == 0
        phantom_dir = tmp_path / "ph"
        assert run("phantom", "--config", small_cfg, "--out", str(phantom_dir)) == 0
        code = run(
            "reconstruct", "--config", small_cfg,
            str(sino_dir / "sino_m0.f32"), str(sino_dir / "sino_m1norm.f32"),
            "--support", str(phantom_dir / "phantom_mask.f32"),
            "--check", "parallax-immunity", "--out", str(out),
        )
        assert code == 0
        report = (out / "metrics.txt").read_text()
        assert "parallax_immunity = PASS" in report

    def test_truth_raster_enables_pearson(self, tmp_path):
        # Peened truth has spatial structure, so the correlation is defined.
        cfg = tmp_path / "peen.cfg"
        cfg.write_text(SMALL.replace("preset = uniform", "preset = peen"))
        small_cfg = str(cfg)
        sino_dir = tmp_path / "sino"
        phantom_dir = tmp_path / "ph"
        out = tmp_path / "rec"
        assert run("sinogram", "--config", small_cfg, "--strain", "--out", str(sino_dir)) == 0
        assert run("phantom", "--config", small_cfg, "--out", str(phantom_dir)) == 0
        code = run(
            "reconstruct", "--config", small_cfg, "--mode", "weighted",
            str(sino_dir / "sino_m0.f32"), str(sino_dir / "sino_m1norm.f32"),
            "--support", str(phantom_dir / "phantom_mask.f32"),
            "--truth", str(phantom_dir / "phantom_strain.f32"),
            "--out", str(out),
        )
        assert code == 0
        report = (out / "metrics.txt").read_text()
        assert "pearson" in report

    def test_epsilon_conversion_and_provenance(self, tmp_path, small_cfg):
        sino_dir = tmp_path / "sino"
        out = tmp_path / "rec"
        assert run("sinogram", "--config", small_cfg, "--strain", "--out", str(sino_dir)) == 0
        code = run(
            "reconstruct", "--config", small_cfg, "--mode", "weighted", "--epsilon",
            str(sino_dir / "sino_m0.f32"), str(sino_dir / "sino_m1norm.f32"),
            "--out", str(out),
        )
        assert code == 0
        rad, meta = read_raster(out / "recon.f32")
        eps, _ = read_raster(out / "recon_epsilon.f32")
        theta = 0.5 * np.deg2rad(13.678)
        np.testing.assert_allclose(eps, (-rad / np.tan(theta)).astype("<f4"), rtol=1e-6)
        assert meta["provenance_mode"] == "weighted"
        assert "provenance_zero_filled_bins" in meta

    def test_missing_input_exits_two(self, tmp_path, small_cfg, capsys):
        code = run("reconstruct", "--config", small_cfg, "missing_m0.f32", "missing_m1.f32",
                   "--out", str(tmp_path / "rec"))
        assert code == 2
        assert "missing" in capsys.readouterr().err

    def test_geometry_digest_mismatch_exits_two(self, tmp_path, small_cfg, capsys):
        sino_dir = tmp_path / "sino"
        assert run("sinogram", "--config", small_cfg, "--parallax", "--out", str(sino_dir)) == 0
        other_cfg = tmp_path / "other.cfg"
        other_cfg.write_text(SMALL.replace("n_angles = 48", "n_angles = 12"))
        code = run("reconstruct", "--config", str(other_cfg),
                   str(sino_dir / "sino_m0.f32"), str(sino_dir / "sino_m1norm.f32"),
                   "--out", str(tmp_path / "rec"))
        assert code == 2
        assert "digest" in capsys.readouterr().err


class TestVerifyCommand:
    def test_default_config_all_pass(self, tmp_path, capsys):
        assert run("verify", "--out", str(tmp_path / "v")) == 0
        out = capsys.readouterr().out
        for tag in ("AC-1", "AC-2", "AC-3", "AC-4", "AC-5", "AC-6"):
            assert f"{tag}" in out
        assert "FAIL" not in out
        assert (tmp_path / "v" / "verify_report.txt").exists()

    def test_injected_z_fault_fails_ac5(self, tmp_path, capsys):
        assert run("verify", "--out", str(tmp_path / "v"), "--inject-z-fault", "1.05") == 1
        out = capsys.readouterr().out
        assert "AC-5" in out and "FAIL" in out

    def test_half_turn_marks_ac3_expected_fail(self, tmp_path, capsys):
        cfg = tmp_path / "half.cfg"
        cfg.write_text("[geometry]\nspan_deg = 180\nn_angles = 100\n"
                       "[phantom]\nshape = disk\ndisk_radius_mm = 0.3\ncenter_x_mm = 0.1\n")
        assert run("verify", "--config", str(cfg), "--out", str(tmp_path / "v")) == 1
        assert "EXPECTED-FAIL" in capsys.readouterr().out


class TestDeterminism:
    def test_identical_runs_are_byte_identical(self, tmp_path, small_cfg, monkeypatch):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert run("sinogram", "--config", small_cfg, "--parallax", "--strain", "--out", str(out_a)) == 0
        monkeypatch.setenv("PARALLAX_DXT_THREADS", "3")
        assert run("sinogram", "--config", small_cfg, "--parallax", "--strain", "--out", str(out_b)) == 0
        for name in ("sino_m0.f32", "sino_m1norm.f32", "sino_valid.f32", "additivity_residual.f32"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
