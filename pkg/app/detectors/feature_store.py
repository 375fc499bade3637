"""Feature and mask lookup for manifest records"""

import logging
import threading
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.features.extractor import MultiScaleFeatures, get_extractor
from app.features.storage import read_features
from app.helpers.constants import FEATURE_SUFFIX
from app.helpers.errors import InputValidationError
from app.helpers.imageio import read_image, read_mask, resize_mask
from app.helpers.schemas import ExtractorConfig, SampleRecord

logger = logging.getLogger(__name__)


def feature_path(features_dir: Union[str, Path], sample_id: str) -> Path:
    return Path(features_dir) / f"{sample_id}{FEATURE_SUFFIX}"


class FeatureStore:
    """Loads ``<sample_id>.adwf`` files, extracting from images when absent

    Loaded features are cached; the cache is shared by protocol folds running
    in parallel threads.
    """

    def __init__(
        self,
        features_dir: Optional[Union[str, Path]] = None,
        root: Optional[Union[str, Path]] = None,
        extractor: Optional[ExtractorConfig] = None,
    ):
        self.features_dir = Path(features_dir) if features_dir else None
        self.root = Path(root) if root else None
        self.extractor = extractor
        self._cache: Dict[str, MultiScaleFeatures] = {}
        self._lock = threading.Lock()

    def load(self, record: SampleRecord) -> MultiScaleFeatures:
        with self._lock:
            cached = self._cache.get(record.sample_id)
        if cached is not None:
            return cached

        features = self._read(record)
        with self._lock:
            self._cache[record.sample_id] = features
        return features

    def _read(self, record: SampleRecord) -> MultiScaleFeatures:
        if self.features_dir is not None:
            path = feature_path(self.features_dir, record.sample_id)
            if path.is_file():
                return read_features(path)
        if self.root is not None and self.extractor is not None:
            image = read_image(self.root / record.image)
            return get_extractor(self.extractor).extract(image)
        raise InputValidationError(
            f"no features for sample {record.sample_id}: "
            "missing feature file and no image extractor configured"
        )

    def mask(
        self, record: SampleRecord, shape: Tuple[int, int], scale_index: int = 0
    ) -> np.ndarray:
        """Foreground at feature resolution; all-true for unmasked records"""
        if record.mask is None or self.root is None:
            return np.ones(shape, dtype=bool)
        full = read_mask(self.root / record.mask)
        if self.extractor is not None:
            projected = get_extractor(self.extractor).receptive_mask(full, scale_index)
            if projected.shape == tuple(shape):
                return projected
        return resize_mask(full, shape)

    def feature_files(self, records: Sequence[SampleRecord]) -> List[Path]:
        """Existing feature files of ``records``"""
        if self.features_dir is None:
            return []
        paths = [feature_path(self.features_dir, r.sample_id) for r in records]
        return [p for p in paths if p.is_file()]

    def defect_mask(self, record: SampleRecord) -> Optional[np.ndarray]:
        if record.defect_mask is None or self.root is None:
            return None
        return read_mask(self.root / record.defect_mask)
