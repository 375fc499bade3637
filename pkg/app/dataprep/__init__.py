"""Dataset manifests, masking, center-embedding, rotation and splitting"""

from .manifest import (
    DatasetManifest,
    LoadedSample,
    filter_manifest,
    load_manifest,
    load_samples,
    write_manifest,
    write_samples,
)
from .split import ThreeWaySplit, three_way_split
from .transforms import (
    apply_mask,
    bounding_box,
    center_embed,
    center_embed_samples,
    mask_samples,
    measure_canvas,
    rotate,
    rotate_augment,
)

__all__ = [
    "DatasetManifest",
    "LoadedSample",
    "ThreeWaySplit",
    "apply_mask",
    "bounding_box",
    "center_embed",
    "center_embed_samples",
    "filter_manifest",
    "load_manifest",
    "load_samples",
    "mask_samples",
    "measure_canvas",
    "rotate",
    "rotate_augment",
    "three_way_split",
    "write_manifest",
    "write_samples",
]
