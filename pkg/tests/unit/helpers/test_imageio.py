"""Tests for image and mask IO"""

import numpy as np
import pytest
from PIL import Image as PILImage

from app.helpers.errors import InputValidationError, ShapeError
from app.helpers.imageio import (
    encode_png,
    read_image,
    read_mask,
    resize_mask,
    to_grayscale,
    write_image,
)


def test_image_round_trip(tmp_path):
    image = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
    path = write_image(tmp_path / "img.png", image)
    np.testing.assert_array_equal(read_image(path), image)


def test_mask_round_trip(tmp_path):
    mask = np.eye(5, dtype=bool)
    path = write_image(tmp_path / "sub" / "mask.png", mask)
    np.testing.assert_array_equal(read_mask(path), mask)


def test_mask_threshold(tmp_path):
    """Test that only values above 127 count as foreground"""
    gray = np.array([[0, 127], [128, 255]], dtype=np.uint8)
    path = write_image(tmp_path / "m.png", gray)
    np.testing.assert_array_equal(read_mask(path), [[False, False], [True, True]])


def test_reads_pgm_and_rgba(tmp_path):
    gray = np.full((3, 2), 200, dtype=np.uint8)
    PILImage.fromarray(gray).save(tmp_path / "g.pgm")
    np.testing.assert_array_equal(read_image(tmp_path / "g.pgm"), gray)
    rgba = np.zeros((2, 2, 4), dtype=np.uint8)
    PILImage.fromarray(rgba).save(tmp_path / "c.png")
    assert read_image(tmp_path / "c.png").shape == (2, 2, 3)


@pytest.mark.parametrize("content", [None, b"not an image"])
def test_read_image_rejects(tmp_path, content):
    path = tmp_path / "broken.png"
    if content is not None:
        path.write_bytes(content)
    with pytest.raises(InputValidationError, match="Cannot read image"):
        read_image(path)


def test_to_grayscale():
    gray = np.full((2, 2), 9, dtype=np.uint8)
    assert to_grayscale(gray) is gray
    white = np.full((2, 2, 3), 255, dtype=np.uint8)
    np.testing.assert_array_equal(to_grayscale(white), np.full((2, 2), 255))
    with pytest.raises(ShapeError):
        to_grayscale(np.zeros((2, 2, 4), dtype=np.uint8))


def test_encode_png_is_deterministic():
    image = np.arange(16, dtype=np.uint8).reshape(4, 4)
    data = encode_png(image)
    assert data.startswith(b"\x89PNG")
    assert data == encode_png(image)


def test_resize_mask_majority():
    mask = np.zeros((4, 4), dtype=bool)
    mask[:2, :2] = True
    mask[2:, 2:] = True
    mask[2, 0] = True
    resized = resize_mask(mask, (2, 2))
    np.testing.assert_array_equal(resized, [[True, False], [False, True]])


def test_resize_mask_same_shape_copies():
    mask = np.eye(3, dtype=bool)
    resized = resize_mask(mask, (3, 3))
    assert resized is not mask
    np.testing.assert_array_equal(resized, mask)
