"""Frozen feature extraction and the ADWF feature container"""

from .extractor import (
    FeatureExtractor,
    MultiScaleFeatures,
    activation_summary,
    extract_features,
    stack_positions,
)
from .normalize import FeatureNormalizer
from .storage import (
    decode_features,
    encode_features,
    read_features,
    read_map,
    write_features,
    write_map,
)

__all__ = [
    "FeatureExtractor",
    "FeatureNormalizer",
    "MultiScaleFeatures",
    "activation_summary",
    "decode_features",
    "encode_features",
    "extract_features",
    "read_features",
    "read_map",
    "stack_positions",
    "write_features",
    "write_map",
]
