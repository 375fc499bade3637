"""Tests for the ADWF feature container"""

import struct

import numpy as np
import pytest

from app.features.extractor import MultiScaleFeatures
from app.features.storage import (
    decode_features,
    encode_features,
    read_features,
    read_map,
    write_features,
    write_map,
)
from app.helpers.errors import FeatureFormatError, TruncatedFeatureFileError


@pytest.fixture
def features() -> MultiScaleFeatures:
    rng = np.random.default_rng(0)
    return MultiScaleFeatures(
        tuple(
            rng.normal(size=(4, n, n)).astype(np.float32) for n in (8, 4, 2)
        )
    )


def test_round_trip_is_bitwise(tmp_path, features):
    path = write_features(tmp_path / "a.adwf", features)
    assert read_features(path).bit_equal(features)


def test_header_layout(features):
    data = encode_features(features)
    assert data[:4] == b"ADWF"
    assert struct.unpack_from("<HH", data, 4) == (1, 3)
    assert struct.unpack_from("<III", data, 8) == (4, 8, 8)
    assert len(data) == 8 + 3 * 12 + 4 * 4 * (64 + 16 + 4)


def test_wrong_magic(features):
    data = b"XXXX" + encode_features(features)[4:]
    with pytest.raises(FeatureFormatError, match="magic"):
        decode_features(data)


@pytest.mark.parametrize("scale_index", [0, 1, 2])
def test_truncation_names_the_scale(features, scale_index):
    data = encode_features(features)
    sizes = [12 + 4 * t.size for t in features.scales]
    cut = 8 + sum(sizes[:scale_index]) + 12 + 10
    with pytest.raises(TruncatedFeatureFileError) as excinfo:
        decode_features(data[:cut])
    assert excinfo.value.scale_index == scale_index


def test_dimension_overflow_is_rejected():
    data = struct.pack("<4sHH", b"ADWF", 1, 1) + struct.pack("<III", 2**16, 2**16, 2)
    with pytest.raises(FeatureFormatError, match="overflow"):
        decode_features(data)


def test_unsupported_version(features):
    data = bytearray(encode_features(features))
    struct.pack_into("<H", data, 4, 9)
    with pytest.raises(FeatureFormatError, match="version"):
        decode_features(bytes(data))


def test_trailing_bytes(features):
    with pytest.raises(FeatureFormatError, match="trailing"):
        decode_features(encode_features(features) + b"\0")


def test_missing_file(tmp_path):
    with pytest.raises(FeatureFormatError):
        read_features(tmp_path / "absent.adwf")


def test_map_round_trip(tmp_path):
    values = np.arange(12, dtype=np.float32).reshape(3, 4)
    path = write_map(tmp_path / "m.adwf", values)
    np.testing.assert_array_equal(read_map(path), values)


def test_read_map_rejects_multiscale(tmp_path, features):
    path = write_features(tmp_path / "a.adwf", features)
    with pytest.raises(FeatureFormatError):
        read_map(path)
