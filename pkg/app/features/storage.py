"""ADWF feature container

Little-endian layout::

    magic "ADWF" | version u16 | scale count u16
    per scale: C u32 | H u32 | W u32 | C*H*W float32 values (row-major)
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.helpers.constants import FEATURE_MAGIC, FEATURE_VERSION, MAX_TENSOR_VALUES
from app.helpers.errors import FeatureFormatError, TruncatedFeatureFileError
from app.helpers.storage import atomic_write_bytes

from .extractor import MultiScaleFeatures

logger = logging.getLogger(__name__)

_FILE_HEADER = struct.Struct("<4sHH")
_SCALE_HEADER = struct.Struct("<III")


def encode_features(features: MultiScaleFeatures) -> bytes:
    parts = [_FILE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, len(features.scales))]
    for tensor in features.scales:
        c, h, w = tensor.shape
        parts.append(_SCALE_HEADER.pack(c, h, w))
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_features(data: bytes) -> MultiScaleFeatures:
    """Parse an ADWF byte string

    Raises:
        FeatureFormatError: Wrong magic, unsupported version, bad dimensions
        TruncatedFeatureFileError: Data ends inside a scale (names the index)
    """
    if len(data) < _FILE_HEADER.size:
        raise FeatureFormatError("file shorter than the ADWF header")
    magic, version, count = _FILE_HEADER.unpack_from(data, 0)
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise FeatureFormatError(f"unsupported ADWF version {version}")
    if count == 0:
        raise FeatureFormatError("ADWF file declares zero scales")

    offset = _FILE_HEADER.size
    scales = []
    for index in range(count):
        if len(data) - offset < _SCALE_HEADER.size:
            raise TruncatedFeatureFileError("header cut short", index)
        c, h, w = _SCALE_HEADER.unpack_from(data, offset)
        offset += _SCALE_HEADER.size
        n_values = c * h * w
        if n_values == 0:
            raise FeatureFormatError(f"scale {index}: zero-sized tensor {c}x{h}x{w}")
        if n_values > MAX_TENSOR_VALUES:
            raise FeatureFormatError(
                f"scale {index}: dimensions {c}x{h}x{w} overflow the size limit"
            )
        n_bytes = 4 * n_values
        if len(data) - offset < n_bytes:
            raise TruncatedFeatureFileError(
                f"expected {n_bytes} bytes of values, found {len(data) - offset}",
                index,
            )
        values = np.frombuffer(data, dtype="<f4", count=n_values, offset=offset)
        scales.append(values.astype(np.float32).reshape(c, h, w))
        offset += n_bytes

    if offset != len(data):
        raise FeatureFormatError(
            f"{len(data) - offset} trailing bytes after last scale"
        )
    return MultiScaleFeatures(tuple(scales))


def write_features(path: Union[str, Path], features: MultiScaleFeatures) -> Path:
    return atomic_write_bytes(path, encode_features(features))


def read_features(path: Union[str, Path]) -> MultiScaleFeatures:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FeatureFormatError(f"Cannot read feature file {path}: {e}") from e
    try:
        return decode_features(data)
    except FeatureFormatError as e:
        logger.error("Invalid feature file %s: %s", path, e.message)
        raise


def write_map(path: Union[str, Path], values: np.ndarray) -> Path:
    """Store a 2-D localization map as a one-scale, one-channel container"""
    tensor = np.asarray(values, dtype=np.float32)[None, :, :]
    return write_features(path, MultiScaleFeatures((tensor,)))


def read_map(path: Union[str, Path]) -> np.ndarray:
    features = read_features(path)
    if len(features.scales) != 1 or features.channels != 1:
        raise FeatureFormatError(f"{path} is not a single-channel map")
    return features.scales[0][0]
