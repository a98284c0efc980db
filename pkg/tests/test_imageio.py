"""
Tests for PGM/PPM decoding, bilinear resizing and pyramids.
"""

import numpy as np
import pytest

from rptm.errors import ConfigError, DimensionError, FormatError, IoError
from rptm.imageio import GrayImage, build_pyramid, load_image, resize_bilinear, save_image

from conftest import noise_image


def write(tmp_path, name, blob):
    path = tmp_path / name
    path.write_bytes(blob)
    return path


class TestGrayImage:
    """Test GrayImage invariants"""

    def test_data_length_must_match_dims(self):
        with pytest.raises(DimensionError):
            GrayImage(2, 2, np.zeros(3, dtype=np.uint8))

    def test_zero_width_rejected(self):
        with pytest.raises(DimensionError):
            GrayImage(0, 1, np.zeros(0, dtype=np.uint8))

    def test_data_is_read_only(self):
        img = GrayImage(2, 1, [1, 2])
        with pytest.raises(ValueError):
            img.data[0, 0] = 5


class TestLoadImage:
    """Test load_image"""

    def test_ascii_pgm(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P2\n2 2\n255\n0 255\n128 64\n")
        img = load_image(path)
        assert img.dims == (2, 2)
        assert img.data.ravel().tolist() == [0, 255, 128, 64]

    def test_binary_ppm_white_pixel(self, tmp_path):
        path = write(tmp_path, "w.ppm", b"P6\n1 1\n255\n\xff\xff\xff")
        assert load_image(path).data.ravel().tolist() == [255]

    def test_ppm_luma(self, tmp_path):
        path = write(tmp_path, "c.ppm", b"P3\n1 1\n255\n10 20 30\n")
        # round(0.299 * 10 + 0.587 * 20 + 0.114 * 30) = round(18.15)
        assert load_image(path).data.ravel().tolist() == [18]

    def test_header_comments_skipped(self, tmp_path):
        path = write(tmp_path, "c.pgm", b"P2\n# made by hand\n1 1 # size\n255\n7\n")
        assert load_image(path).data.ravel().tolist() == [7]

    def test_sixteen_bit_rescaled(self, tmp_path):
        path = write(tmp_path, "d.pgm", b"P5\n2 1\n65535\n\xff\xff\x00\x00")
        assert load_image(path).data.ravel().tolist() == [255, 0]

    def test_bad_magic(self, tmp_path):
        path = write(tmp_path, "bad.pgm", b"P9\n1 1\n255\n\x00")
        with pytest.raises(FormatError):
            load_image(path)

    def test_truncated_payload(self, tmp_path):
        path = write(tmp_path, "t.pgm", b"P5\n4 4\n255\n\x00\x01\x02")
        with pytest.raises(FormatError) as info:
            load_image(path)
        assert "truncated" in str(info.value)

    def test_oversized_dimensions(self, tmp_path):
        path = write(tmp_path, "big.pgm", b"P5\n9000 1\n255\n")
        with pytest.raises(FormatError):
            load_image(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_image(tmp_path / "nope.pgm")

    def test_binary_round_trip(self, tmp_path):
        img = noise_image(3, 17, 11)
        save_image(img, tmp_path / "r.pgm")
        again = load_image(tmp_path / "r.pgm")
        save_image(again, tmp_path / "r2.pgm")
        assert again == img
        assert (tmp_path / "r.pgm").read_bytes() == (tmp_path / "r2.pgm").read_bytes()

    def test_ascii_round_trip(self, tmp_path):
        img = noise_image(4, 5, 3)
        save_image(img, tmp_path / "r.pgm", binary=False)
        assert load_image(tmp_path / "r.pgm") == img


class TestResize:
    """Test resize_bilinear"""

    def test_identity(self):
        img = noise_image(0, 13, 7)
        assert resize_bilinear(img, 13, 7) == img

    def test_midpoint(self):
        img = GrayImage(1, 2, [0, 200])
        assert resize_bilinear(img, 1, 3).data.ravel().tolist() == [0, 100, 200]

    def test_target_dims(self):
        assert resize_bilinear(noise_image(0, 100, 50), 224, 224).dims == (224, 224)

    def test_zero_target(self):
        with pytest.raises(DimensionError):
            resize_bilinear(noise_image(0, 4, 4), 0, 4)

    def test_output_within_input_range(self):
        data = np.random.default_rng(5).integers(40, 200, size=(9, 12), dtype=np.uint8)
        out = resize_bilinear(GrayImage.from_array(data), 31, 17).data
        assert out.min() >= data.min()
        assert out.max() <= data.max()

    def test_deterministic(self):
        img = noise_image(6, 40, 30)
        assert resize_bilinear(img, 23, 29) == resize_bilinear(img, 23, 29)


class TestPyramid:
    """Test build_pyramid"""

    def test_single_level(self):
        img = noise_image(0, 20, 20)
        assert build_pyramid(img, 1, 1.2) == [img]

    def test_default_dims(self):
        dims = [level.dims for level in build_pyramid(noise_image(0), 4, 1.2)]
        assert dims == [(224, 224), (186, 186), (155, 155), (129, 129)]

    def test_truncation(self):
        dims = [level.dims for level in build_pyramid(noise_image(0, 16, 16), 4, 2.0)]
        assert dims == [(16, 16), (8, 8)]

    @pytest.mark.parametrize("levels, factor", [(0, 1.2), (3, 1.0)])
    def test_invalid_parameters(self, levels, factor):
        with pytest.raises(ConfigError):
            build_pyramid(noise_image(0, 16, 16), levels, factor)
