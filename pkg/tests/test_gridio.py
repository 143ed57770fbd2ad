import numpy as np
import pytest

from parallax_dxt.errors import RasterError
from parallax_dxt.gridio import meta_path, read_pgm, read_raster, write_pgm, write_raster


class TestRaster:
    def test_round_trip_is_lossless(self, tmp_path):
        rng = np.random.default_rng(2)
        values = rng.standard_normal((17, 23)).astype("<f4").astype(float)
        path = tmp_path / "field.f32"
        write_raster(path, values, {"kind": "test", "units": "mm"})
        back, meta = read_raster(path)
        np.testing.assert_array_equal(back, values)
        assert meta["kind"] == "test"
        assert meta["nrows"] == "17"
        assert meta["ncols"] == "23"
        assert meta["dtype"] == "float32-le"

    def test_rewrite_is_byte_identical(self, tmp_path):
        values = np.arange(12.0).reshape(3, 4)
        a = tmp_path / "a.f32"
        b = tmp_path / "b.f32"
        write_raster(a, values, {"kind": "x"})
        write_raster(b, values, {"kind": "x"})
        assert a.read_bytes() == b.read_bytes()
        assert meta_path(a).read_text() == meta_path(b).read_text()

    def test_payload_is_little_endian_float32(self, tmp_path):
        path = tmp_path / "v.f32"
        write_raster(path, np.array([[1.5, -2.0]]), {})
        assert path.read_bytes() == np.array([1.5, -2.0], "<f4").tobytes()

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "bad.f32"
        write_raster(path, np.ones((4, 4)), {})
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(RasterError, match="payload"):
            read_raster(path)

    def test_missing_sidecar_rejected(self, tmp_path):
        path = tmp_path / "orphan.f32"
        write_raster(path, np.ones((2, 2)), {})
        meta_path(path).unlink()
        with pytest.raises(RasterError, match="sidecar"):
            read_raster(path)

    def test_non_2d_rejected(self, tmp_path):
        with pytest.raises(RasterError, match="2-D"):
            write_raster(tmp_path / "x.f32", np.ones(5), {})

    def test_malformed_header_line(self, tmp_path):
        path = tmp_path / "v.f32"
        write_raster(path, np.ones((2, 2)), {})
        side = meta_path(path)
        side.write_text(side.read_text() + "not a pair\n")
        with pytest.raises(RasterError, match="key = value"):
            read_raster(path)


class TestPgm:
    def test_p2_and_p5_agree(self, tmp_path):
        values = np.arange(12, dtype=np.uint8).reshape(3, 4)
        p2 = tmp_path / "a.pgm"
        p2.write_text("P2\n# comment\n4 3\n255\n" + " ".join(str(v) for v in values.ravel()))
        p5 = tmp_path / "b.pgm"
        p5.write_bytes(b"P5\n4 3\n255\n" + values.tobytes())
        np.testing.assert_array_equal(read_pgm(p2), values)
        np.testing.assert_array_equal(read_pgm(p5), values)

    def test_sixteen_bit_p5(self, tmp_path):
        values = np.array([[300, 70000 % 65535]], dtype=">u2")
        path = tmp_path / "wide.pgm"
        path.write_bytes(b"P5\n2 1\n65535\n" + values.tobytes())
        np.testing.assert_array_equal(read_pgm(path), values.astype(np.int64))

    def test_rejects_other_magic(self, tmp_path):
        path = tmp_path / "rgb.ppm"
        path.write_bytes(b"P6\n1 1\n255\nxyz")
        with pytest.raises(RasterError, match="P2/P5"):
            read_pgm(path)

    def test_write_pgm_round_trip_scale(self, tmp_path):
        values = np.linspace(-1.0, 3.0, 20).reshape(4, 5)
        path = tmp_path / "img.pgm"
        write_pgm(path, values, comment="demo")
        pixels = read_pgm(path)
        assert pixels.min() == 0 and pixels.max() == 255
        header = path.read_bytes()[:120].decode(errors="replace")
        assert "min = -1" in header and "demo" in header

    def test_write_pgm_constant_field(self, tmp_path):
        path = tmp_path / "flat.pgm"
        write_pgm(path, np.full((3, 3), 7.0))
        assert (read_pgm(path) == 0).all()
