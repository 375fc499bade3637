"""Detector interface and construction by kind"""

from enum import Enum
from typing import Callable, List, Optional, Protocol, Sequence

from app.core.config import RunConfig
from app.helpers.errors import InputValidationError
from app.helpers.schemas import SampleRecord, ScoreRecord

from .feature_store import FeatureStore
from .learned import DiscriminatorDetector, FlowDetector
from .reference import GaussianDetector, OracleDetector, RandomDetector


class DetectorKind(str, Enum):
    """Detectors selectable from the command line"""

    FLOW = "flow"
    DISCRIMINATOR = "discriminator"
    ORACLE = "oracle"
    RANDOM = "random"
    GAUSSIAN = "gaussian"

    @property
    def trainable(self) -> bool:
        return self in (DetectorKind.FLOW, DetectorKind.DISCRIMINATOR)


class Detector(Protocol):
    """Anything that can be fitted on nominal records and score records"""

    name: str

    def fit(self, records: Sequence[SampleRecord]) -> None: ...

    def score(self, records: Sequence[SampleRecord]) -> List[ScoreRecord]: ...


DetectorFactory = Callable[[int], Detector]


def make_detector(
    kind: DetectorKind,
    seed: int,
    cfg: Optional[RunConfig] = None,
    store: Optional[FeatureStore] = None,
) -> Detector:
    """Fresh, untrained detector of ``kind`` seeded with ``seed``

    The trainable kinds need the run configuration and a feature store.
    """
    kind = DetectorKind(kind)
    if kind == DetectorKind.ORACLE:
        return OracleDetector()
    if kind == DetectorKind.RANDOM:
        return RandomDetector(seed)
    if kind == DetectorKind.GAUSSIAN:
        return GaussianDetector(seed)
    if cfg is None or store is None:
        raise InputValidationError(f"{kind.value} detector needs a config and features")
    if kind == DetectorKind.FLOW:
        return FlowDetector(cfg, store, seed)
    return DiscriminatorDetector(cfg, store, seed)


def detector_factory(
    kind: DetectorKind,
    cfg: Optional[RunConfig] = None,
    store: Optional[FeatureStore] = None,
) -> DetectorFactory:
    """Factory the protocol calls once per fold with the fold seed"""

    def build(seed: int) -> Detector:
        return make_detector(kind, seed, cfg, store)

    return build
