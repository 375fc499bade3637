"""Trainable detectors: the coupling flow and the adaptor/discriminator"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import RunConfig
from app.features.extractor import MultiScaleFeatures
from app.features.normalize import FeatureNormalizer
from app.helpers.errors import InputValidationError, ShapeError
from app.helpers.schemas import EpochRecord, SampleRecord, ScoreRecord
from app.numerics.rng import derive_seed, seeded_rng

from .checkpoint import (
    Checkpoint,
    discriminator_checkpoint,
    discriminator_from_checkpoint,
    flow_checkpoint,
    flow_from_checkpoint,
    save_checkpoint,
)
from .feature_store import FeatureStore
from .flow import (
    CouplingFlow,
    image_score,
    latent_maps,
    localization_map,
    log_density,
    train_flow,
)
from .synthdisc import AdaptorDiscriminator, disc_score, train_discriminator

logger = logging.getLogger(__name__)


class _FeatureDetector:
    """Shared plumbing: feature lookup, scoring loop, fitted-state checks"""

    name = "detector"

    def __init__(self, cfg: RunConfig, store: Optional[FeatureStore], seed: int):
        self.cfg = cfg
        self.store = store
        self.seed = seed
        self.normalizer: Optional[FeatureNormalizer] = None
        self.history: List[EpochRecord] = []

    def _load(self, record: SampleRecord) -> MultiScaleFeatures:
        if self.store is None:
            raise InputValidationError(f"{self.name} detector has no feature store")
        return self.store.load(record)

    def _require_fitted(self, model: Any) -> Any:
        if model is None or self.normalizer is None:
            raise InputValidationError(f"{self.name} detector is not trained")
        return model

    def score_features(self, features: MultiScaleFeatures) -> float:
        raise NotImplementedError

    def score(self, records: Sequence[SampleRecord]) -> List[ScoreRecord]:
        out = []
        for record in records:
            try:
                value = self.score_features(self._load(record))
            except ShapeError as e:
                raise ShapeError(f"sample {record.sample_id}: {e.message}") from e
            out.append(
                ScoreRecord(sample_id=record.sample_id, label=record.label, score=value)
            )
        return out


class FlowDetector(_FeatureDetector):
    """Coupling flow on standardized multi-scale features"""

    name = "flow"

    def __init__(self, cfg: RunConfig, store: Optional[FeatureStore], seed: int):
        super().__init__(cfg, store, seed)
        self.flow: Optional[CouplingFlow] = None

    def fit(self, records: Sequence[SampleRecord]) -> None:
        self.fit_features([self._load(r) for r in records])

    def fit_features(self, features: Sequence[MultiScaleFeatures]) -> None:
        if not features:
            raise InputValidationError(
                "flow training needs at least one nominal sample"
            )
        self.normalizer = FeatureNormalizer.fit(features)
        x = self.normalizer.transform(features)
        rng = seeded_rng(self.seed)
        flow = CouplingFlow.build(
            features[0].channels, len(x), self.cfg.flow, rng.child(0)
        )
        train_cfg = self.cfg.train.model_copy(
            update={"seed": derive_seed(self.seed, self.cfg.train.seed)}
        )
        self.flow, self.history = train_flow(
            flow,
            x,
            train_cfg,
            eval_fn=lambda f: {"train_score": float(image_score(f, x).mean())},
        )
        logger.info(
            "Trained flow on %d samples",
            len(features),
            extra={"seed": self.seed, "epochs": train_cfg.epochs},
        )

    def _positions(self, features: MultiScaleFeatures) -> List[np.ndarray]:
        assert self.normalizer is not None
        return self.normalizer.transform([features])

    def score_features(self, features: MultiScaleFeatures) -> float:
        flow = self._require_fitted(self.flow)
        return float(image_score(flow, self._positions(features))[0])

    def localization(self, features: MultiScaleFeatures) -> np.ndarray:
        """Latent-norm map at the finest feature resolution"""
        flow = self._require_fitted(self.flow)
        result = log_density(flow, self._positions(features))
        spatial = [(h, w) for _, h, w in features.shapes]
        return localization_map(latent_maps(result.latent, spatial, 0))

    def save(
        self, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None
    ) -> Path:
        flow = self._require_fitted(self.flow)
        meta, arrays = flow_checkpoint(flow, self.normalizer)
        meta.update(extra or {})
        return save_checkpoint(path, "flow", meta, arrays)

    @classmethod
    def from_checkpoint(
        cls, checkpoint: Checkpoint, store: Optional[FeatureStore] = None
    ) -> "FlowDetector":
        flow, normalizer = flow_from_checkpoint(checkpoint)
        detector = cls(RunConfig(flow=flow.config), store, seed=0)
        detector.flow = flow
        detector.normalizer = normalizer or FeatureNormalizer.identity(
            flow.dim, flow.num_scales
        )
        return detector


class DiscriminatorDetector(_FeatureDetector):
    """Adaptor/discriminator on one feature scale, trained with synthesis"""

    name = "discriminator"

    def __init__(self, cfg: RunConfig, store: Optional[FeatureStore], seed: int):
        super().__init__(cfg, store, seed)
        self.model: Optional[AdaptorDiscriminator] = None

    @property
    def scale_index(self) -> int:
        return self.cfg.discriminator.scale_index

    def fit(self, records: Sequence[SampleRecord]) -> None:
        features = [self._load(r) for r in records]
        masks = []
        for record, f in zip(records, features):
            _, h, w = self._scale(f).shape
            assert self.store is not None
            masks.append(self.store.mask(record, (h, w), self.scale_index))
        self.fit_features(features, masks)

    def _scale(self, features: MultiScaleFeatures) -> np.ndarray:
        if self.scale_index >= len(features.scales):
            raise ShapeError(
                f"scale index {self.scale_index} out of range for "
                f"{len(features.scales)} scales"
            )
        return features.scales[self.scale_index]

    def _tensor(self, features: MultiScaleFeatures) -> np.ndarray:
        """Scale-normalized (C, H, W); zero vectors stay zero"""
        assert self.normalizer is not None
        tensor = self._scale(features).astype(np.float64)
        return tensor / self.normalizer.stds[self.scale_index][:, None, None]

    def fit_features(
        self,
        features: Sequence[MultiScaleFeatures],
        masks: Optional[Sequence[np.ndarray]] = None,
    ) -> None:
        if not features:
            raise InputValidationError("discriminator training needs nominal samples")
        self.normalizer = FeatureNormalizer.fit(features, center=False)
        try:
            grids = np.stack([np.moveaxis(self._tensor(f), 0, -1) for f in features])
        except ValueError as e:
            raise ShapeError(f"discriminator inputs differ in size: {e}") from e
        if masks is None:
            fg = np.ones(grids.shape[:3], dtype=bool)
        else:
            fg = np.stack([np.asarray(m, dtype=bool) for m in masks])

        cfg = self.cfg
        rng = seeded_rng(derive_seed(self.seed, cfg.synth_local.seed))
        model = AdaptorDiscriminator.build(
            grids.shape[-1], cfg.discriminator, rng.child(0)
        )
        self.model, self.history = train_discriminator(
            model,
            grids,
            fg,
            cfg.synth_local,
            cfg.synth_global,
            cfg.discriminator.epochs,
            rng.child(1),
        )
        logger.info(
            "Trained discriminator on %d samples",
            len(features),
            extra={"seed": self.seed, "epochs": cfg.discriminator.epochs},
        )

    def score_map(self, features: MultiScaleFeatures) -> Tuple[float, np.ndarray]:
        model = self._require_fitted(self.model)
        return disc_score(model, self._tensor(features))

    def score_features(self, features: MultiScaleFeatures) -> float:
        return self.score_map(features)[0]

    def localization(self, features: MultiScaleFeatures) -> np.ndarray:
        return self.score_map(features)[1]

    def save(
        self, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None
    ) -> Path:
        model = self._require_fitted(self.model)
        meta, arrays = discriminator_checkpoint(model, self.normalizer)
        meta.update(extra or {})
        return save_checkpoint(path, "discriminator", meta, arrays)

    @classmethod
    def from_checkpoint(
        cls, checkpoint: Checkpoint, store: Optional[FeatureStore] = None
    ) -> "DiscriminatorDetector":
        model, normalizer = discriminator_from_checkpoint(checkpoint)
        detector = cls(RunConfig(discriminator=model.config), store, seed=0)
        detector.model = model
        detector.normalizer = normalizer
        if normalizer is None:
            raise InputValidationError("discriminator checkpoint lacks feature scales")
        return detector


def load_detector(
    checkpoint: Checkpoint, store: Optional[FeatureStore] = None
) -> Union[FlowDetector, DiscriminatorDetector]:
    if checkpoint.kind == "flow":
        return FlowDetector.from_checkpoint(checkpoint, store)
    return DiscriminatorDetector.from_checkpoint(checkpoint, store)
