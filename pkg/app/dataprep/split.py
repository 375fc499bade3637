"""Leakage-safe three-way split at object granularity"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from app.helpers.errors import SplitError
from app.helpers.schemas import SampleRecord
from app.numerics.rng import seeded_rng

logger = logging.getLogger(__name__)


@dataclass
class ThreeWaySplit:
    """Nominal training data plus two test partitions

    No object id occurs in more than one partition. ``excluded`` holds nominal
    records of objects that also carry anomalous records; they can be in no
    partition without a leak.
    """

    train: List[SampleRecord] = field(default_factory=list)
    threshold_part: List[SampleRecord] = field(default_factory=list)
    inference_part: List[SampleRecord] = field(default_factory=list)
    excluded: List[SampleRecord] = field(default_factory=list)

    def object_ids(self, part: str) -> set:
        return {r.object_id for r in getattr(self, part)}


def _group(records: Sequence[SampleRecord]) -> Dict[str, List[SampleRecord]]:
    groups: Dict[str, List[SampleRecord]] = {}
    for record in records:
        groups.setdefault(record.object_id, []).append(record)
    return groups


def nominal_test_objects(
    n_nominal: int, anomalous_half: int, train_fraction: Optional[float]
) -> int:
    """Objects per nominal test partition

    By default each partition mirrors an anomalous half, as long as at least
    one nominal object remains for training.
    """
    if train_fraction is None:
        return min(anomalous_half, (n_nominal - 1) // 2)
    return int(n_nominal * (1.0 - train_fraction)) // 2


def three_way_split(
    records: Sequence[SampleRecord],
    seed: int,
    nominal_train_fraction: Optional[float] = None,
) -> ThreeWaySplit:
    """Seeded split into train / threshold / inference partitions by object

    Anomalous objects (any anomalous record) are shuffled and halved; the
    threshold partition takes the extra one for odd counts. Two equally sized
    groups of nominal objects join the test partitions, the rest is training.

    Raises:
        SplitError: Fewer than two anomalous objects, or too few nominal
            objects to fill both test partitions and leave one for training
    """
    groups = _group(records)
    anomalous_ids = sorted(
        oid for oid, recs in groups.items() if any(r.is_anomalous for r in recs)
    )
    nominal_ids = sorted(oid for oid in groups if oid not in set(anomalous_ids))
    if len(anomalous_ids) < 2:
        raise SplitError(
            f"need at least 2 anomalous objects to split, found {len(anomalous_ids)}"
        )

    rng = seeded_rng(seed)
    anomalous_ids = rng.child(0).shuffled(anomalous_ids)
    nominal_ids = rng.child(1).shuffled(nominal_ids)

    n_threshold = (len(anomalous_ids) + 1) // 2
    threshold_anom = anomalous_ids[:n_threshold]
    inference_anom = anomalous_ids[n_threshold:]

    m = nominal_test_objects(
        len(nominal_ids), len(inference_anom), nominal_train_fraction
    )
    if m < 1 or len(nominal_ids) - 2 * m < 1:
        raise SplitError(
            f"{len(nominal_ids)} nominal objects cannot fill two test partitions "
            "and a training set"
        )
    threshold_nom = nominal_ids[:m]
    inference_nom = nominal_ids[m : 2 * m]
    train_nom = nominal_ids[2 * m :]

    split = ThreeWaySplit()
    for oid in train_nom:
        split.train.extend(groups[oid])
    for part, nominal, anomalous in (
        (split.threshold_part, threshold_nom, threshold_anom),
        (split.inference_part, inference_nom, inference_anom),
    ):
        for oid in nominal:
            part.extend(groups[oid])
        for oid in anomalous:
            for record in groups[oid]:
                (part if record.is_anomalous else split.excluded).append(record)

    if split.excluded:
        logger.info(
            "Excluded %d nominal records of anomalous objects from the split",
            len(split.excluded),
        )
    logger.debug(
        "Split sizes: train %d, threshold %d, inference %d",
        len(split.train),
        len(split.threshold_part),
        len(split.inference_part),
        extra={"seed": seed},
    )
    return split
