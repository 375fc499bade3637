"""Per-scale, per-channel standardization fitted on training features"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from app.helpers.errors import ShapeError

from .extractor import MultiScaleFeatures, stack_positions

_MIN_STD = 1e-6


@dataclass
class FeatureNormalizer:
    """Mean/std per channel for every scale"""

    means: List[np.ndarray]
    stds: List[np.ndarray]

    @classmethod
    def identity(cls, channels: int, num_scales: int) -> "FeatureNormalizer":
        return cls(
            [np.zeros(channels) for _ in range(num_scales)],
            [np.ones(channels) for _ in range(num_scales)],
        )

    @classmethod
    def fit(
        cls, features: Sequence[MultiScaleFeatures], center: bool = True
    ) -> "FeatureNormalizer":
        """With ``center=False`` only the scale is fitted, so zero stays zero"""
        if not features:
            raise ShapeError("cannot fit a normalizer on zero samples")
        means, stds = [], []
        for positions in stack_positions(features):
            flat = positions.reshape(-1, positions.shape[-1])
            std = flat.std(axis=0)
            mean = flat.mean(axis=0)
            means.append(mean if center else np.zeros_like(mean))
            stds.append(np.where(std > _MIN_STD, std, 1.0))
        return cls(means, stds)

    @property
    def num_scales(self) -> int:
        return len(self.means)

    def transform(self, features: Sequence[MultiScaleFeatures]) -> List[np.ndarray]:
        """Standardized (B, H*W, C) arrays per scale"""
        batch = stack_positions(features)
        if len(batch) != self.num_scales:
            raise ShapeError(
                f"features have {len(batch)} scales, normalizer {self.num_scales}"
            )
        out = []
        for positions, mean, std in zip(batch, self.means, self.stds):
            if positions.shape[-1] != mean.shape[0]:
                raise ShapeError(
                    f"features have {positions.shape[-1]} channels, "
                    f"normalizer {mean.shape[0]}"
                )
            out.append((positions - mean) / std)
        return out
