"""Label-driven reference detectors for calibrating the evaluation protocol

None of them look at images: they emit scores with a known ROC so the
protocol's estimates can be checked against closed-form values.
"""

from typing import List, Sequence

import numpy as np

from app.helpers.schemas import SampleRecord, ScoreRecord
from app.numerics.rng import seeded_rng


class OracleDetector:
    """Score 1 for anomalous records, 0 for nominal ones"""

    name = "oracle"

    def fit(self, records: Sequence[SampleRecord]) -> None:
        return None

    def score(self, records: Sequence[SampleRecord]) -> List[ScoreRecord]:
        return [
            ScoreRecord(
                sample_id=r.sample_id,
                label=r.label,
                score=1.0 if r.is_anomalous else 0.0,
            )
            for r in records
        ]


class RandomDetector:
    """Uniform scores independent of the labels (AUROC 0.5 in expectation)"""

    name = "random"

    def __init__(self, seed: int):
        self._rng = seeded_rng(seed)

    def fit(self, records: Sequence[SampleRecord]) -> None:
        return None

    def score(self, records: Sequence[SampleRecord]) -> List[ScoreRecord]:
        values = np.asarray(self._rng.draw_uniform(len(records)))
        return [
            ScoreRecord(sample_id=r.sample_id, label=r.label, score=float(v))
            for r, v in zip(records, values)
        ]


class GaussianDetector:
    """Nominal scores ~ N(0, 1), anomalous ~ N(separation, 1)

    The population AUROC is ``Phi(separation / sqrt(2))``. Draws happen in
    record order, so a fixed seed gives fixed scores.
    """

    name = "gaussian"

    def __init__(self, seed: int, separation: float = 2.0):
        self._rng = seeded_rng(seed)
        self.separation = separation

    def fit(self, records: Sequence[SampleRecord]) -> None:
        return None

    def score(self, records: Sequence[SampleRecord]) -> List[ScoreRecord]:
        noise = np.asarray(self._rng.draw_normal(len(records)))
        return [
            ScoreRecord(
                sample_id=r.sample_id,
                label=r.label,
                score=float(e + (self.separation if r.is_anomalous else 0.0)),
            )
            for r, e in zip(records, noise)
        ]
