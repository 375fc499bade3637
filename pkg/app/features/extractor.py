"""Frozen multi-scale feature extraction

A bank of seeded random filters stands in for a pretrained backbone: each scale
is the grayscale image downsampled by an integer factor, convolved with valid
padding, rectified and pooled. The extractor is fixed per configuration, so
features are reproducible from ``(image, cfg.seed)`` alone.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.helpers.errors import ShapeError
from app.helpers.imageio import to_grayscale
from app.helpers.schemas import ExtractorConfig, PoolingMode
from app.numerics.rng import seeded_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MultiScaleFeatures:
    """Ordered feature tensors, each (C, H, W), finest scale first"""

    scales: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.scales:
            raise ShapeError("at least one scale is required")
        channels = None
        for i, tensor in enumerate(self.scales):
            if tensor.ndim != 3 or min(tensor.shape[1:]) < 1:
                raise ShapeError(f"scale {i}: expected (C, H, W), got {tensor.shape}")
            if channels is not None and tensor.shape[0] != channels:
                raise ShapeError(
                    f"scale {i} has {tensor.shape[0]} channels, expected {channels}"
                )
            channels = tensor.shape[0]

    @property
    def channels(self) -> int:
        return int(self.scales[0].shape[0])

    @property
    def shapes(self) -> List[Tuple[int, int, int]]:
        return [(int(c), int(h), int(w)) for c, h, w in (t.shape for t in self.scales)]

    def is_pyramid(self) -> bool:
        """H and W halve (integer division) between consecutive scales"""
        for finer, coarser in zip(self.scales[:-1], self.scales[1:]):
            if coarser.shape[1] != finer.shape[1] // 2:
                return False
            if coarser.shape[2] != finer.shape[2] // 2:
                return False
        return True

    def bit_equal(self, other: "MultiScaleFeatures") -> bool:
        if len(self.scales) != len(other.scales):
            return False
        return all(
            a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.scales, other.scales)
        )


def _downscale(image: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return image
    h, w = image.shape[0] // factor, image.shape[1] // factor
    cropped = image[: h * factor, : w * factor]
    return cropped.reshape(h, factor, w, factor).mean(axis=(1, 3))


def _pool(maps: np.ndarray, size: int, mode: PoolingMode) -> np.ndarray:
    c, h, w = maps.shape
    oh, ow = h // size, w // size
    blocks = maps[:, : oh * size, : ow * size].reshape(c, oh, size, ow, size)
    if mode == PoolingMode.MAX:
        return blocks.max(axis=(2, 4))
    return blocks.mean(axis=(2, 4))


class FeatureExtractor:
    """Immutable bank of unit-norm Gaussian filters"""

    def __init__(self, cfg: ExtractorConfig):
        self.cfg = cfg
        rng = seeded_rng(cfg.seed)
        filters = np.asarray(
            rng.draw_normal((cfg.num_filters, cfg.kernel_size, cfg.kernel_size)),
            dtype=np.float64,
        )
        norms = np.sqrt((filters**2).sum(axis=(1, 2), keepdims=True))
        self.filters = filters / np.where(norms > 0, norms, 1.0)
        self.filters.setflags(write=False)

    def output_shapes(self, height: int, width: int) -> List[Tuple[int, int, int]]:
        """Shape arithmetic: floor((s * ratio - k + 1) / pool) per scale"""
        shapes = []
        k, p = self.cfg.kernel_size, self.cfg.pool_size
        for ratio in self.cfg.scale_ratios:
            factor = round(1.0 / ratio)
            sh, sw = height // factor, width // factor
            shapes.append(
                (self.cfg.num_filters, max(sh - k + 1, 0) // p, max(sw - k + 1, 0) // p)
            )
        return shapes

    def extract(self, image: np.ndarray) -> MultiScaleFeatures:
        gray = to_grayscale(np.asarray(image)).astype(np.float64) / 255.0
        k, p = self.cfg.kernel_size, self.cfg.pool_size
        scales = []
        for index, ratio in enumerate(self.cfg.scale_ratios):
            scaled = _downscale(gray, round(1.0 / ratio))
            if min(scaled.shape) < k or min(scaled.shape) - k + 1 < p:
                raise ShapeError(
                    f"image {gray.shape[1]}x{gray.shape[0]} too small at scale "
                    f"{index} (ratio {ratio}): kernel {k}, pool {p}"
                )
            windows = sliding_window_view(scaled, (k, k))
            response = np.einsum("hwij,cij->chw", windows, self.filters)
            pooled = _pool(np.maximum(response, 0.0), p, self.cfg.pooling)
            scales.append(pooled.astype(np.float32))
        return MultiScaleFeatures(tuple(scales))

    def receptive_mask(self, mask: np.ndarray, scale_index: int = 0) -> np.ndarray:
        """Feature positions whose receptive field touches the foreground

        Positions outside this mask only ever see zero pixels of a masked image,
        so their features are exactly zero.
        """
        k, p = self.cfg.kernel_size, self.cfg.pool_size
        factor = round(1.0 / self.cfg.scale_ratios[scale_index])
        h, w = mask.shape[0] // factor, mask.shape[1] // factor
        cells = mask[: h * factor, : w * factor].reshape(h, factor, w, factor)
        scaled = cells.any(axis=(1, 3))
        if min(scaled.shape) < k:
            raise ShapeError(f"mask too small at scale {scale_index}")
        covered = sliding_window_view(scaled, (k, k)).any(axis=(2, 3))
        return _pool(covered[None].astype(np.float64), p, PoolingMode.MAX)[0] > 0


@lru_cache(maxsize=8)
def get_extractor(cfg: ExtractorConfig) -> FeatureExtractor:
    """Extractors are immutable; one per configuration is enough"""
    logger.debug("Building feature extractor", extra={"extractor": cfg.model_dump()})
    return FeatureExtractor(cfg)


def extract_features(image: np.ndarray, cfg: ExtractorConfig) -> MultiScaleFeatures:
    """Deterministic multi-scale features of one image"""
    return get_extractor(cfg).extract(image)


def activation_summary(tensor: np.ndarray) -> np.ndarray:
    """Per-position maximum over the channel dimension of a (C, H, W) tensor"""
    tensor = np.asarray(tensor)
    if tensor.ndim != 3:
        raise ShapeError(f"expected (C, H, W), got {tensor.shape}")
    return tensor.max(axis=0)


def stack_positions(features: Sequence[MultiScaleFeatures]) -> List[np.ndarray]:
    """Batch of (B, H*W, C) float64 arrays, one per scale"""
    if not features:
        return []
    out = []
    for s in range(len(features[0].scales)):
        try:
            out.append(
                np.stack(
                    [
                        f.scales[s].reshape(f.channels, -1).T.astype(np.float64)
                        for f in features
                    ]
                )
            )
        except ValueError as e:
            raise ShapeError(f"scale {s}: samples differ in size") from e
    return out
