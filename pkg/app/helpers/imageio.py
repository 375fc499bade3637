"""Image and mask IO (PNG, PGM, PPM) through Pillow"""

import io
import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .constants import MASK_THRESHOLD
from .errors import InputValidationError, ShapeError
from .storage import atomic_write_bytes

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_image(path: PathLike) -> np.ndarray:
    """8-bit image as (H, W) or (H, W, 3) uint8"""
    try:
        with PILImage.open(path) as img:
            mode = img.mode
            if mode not in ("L", "RGB"):
                img = img.convert("RGB" if mode in ("RGBA", "P", "CMYK") else "L")
            data = np.asarray(img, dtype=np.uint8).copy()
    except (OSError, UnidentifiedImageError) as e:
        raise InputValidationError(f"Cannot read image {path}: {e}") from e
    return data


def read_mask(path: PathLike) -> np.ndarray:
    """Single-channel mask binarized at value > 127"""
    data = read_image(path)
    if data.ndim == 3:
        data = to_grayscale(data)
    return data > MASK_THRESHOLD


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma conversion (ITU-R 601-2, as Pillow's 'L' mode)"""
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected (H, W) or (H, W, 3) image, got {image.shape}")
    rgb = PILImage.fromarray(np.ascontiguousarray(image, dtype=np.uint8))
    return np.asarray(rgb.convert("L"))


def encode_png(image: np.ndarray) -> bytes:
    if image.dtype == bool:
        image = image.astype(np.uint8) * 255
    buffer = io.BytesIO()
    PILImage.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(
        buffer, format="PNG"
    )
    return buffer.getvalue()


def write_image(path: PathLike, image: np.ndarray) -> Path:
    """Write uint8 image or boolean mask as PNG, atomically"""
    return atomic_write_bytes(path, encode_png(image))


def resize_mask(mask: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    """Box-resample a boolean mask to ``shape`` (H, W); a cell is set when
    more than half of its area is foreground"""
    if mask.shape == tuple(shape):
        return mask.copy()
    height, width = shape
    img = PILImage.fromarray(mask.astype(np.float32))
    resized = img.resize((width, height), resample=PILImage.Resampling.BOX)
    return np.asarray(resized) > 0.5
