"""ROC curves, AUROC and operating-point selection

Classification convention everywhere: a sample is anomalous iff its score is
strictly greater than the threshold.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from sklearn import metrics as skm

from app.helpers.errors import InputValidationError, ShapeError
from app.helpers.schemas import Label, RocPoints, ThresholdCriterion, ThresholdRule
from app.helpers.validators import check_finite

logger = logging.getLogger(__name__)

LabelLike = Union[Sequence[bool], Sequence[Label], np.ndarray]


def as_binary_labels(labels: LabelLike) -> np.ndarray:
    """True for anomalous; accepts booleans, 0/1, Label or label strings"""
    return np.array(
        [
            lbl == Label.ANOMALOUS if isinstance(lbl, str) else bool(lbl)
            for lbl in labels
        ],
        dtype=bool,
    )


@dataclass(frozen=True)
class RocCurve:
    """Points ordered by strictly decreasing threshold, (0,0) first, (1,1) last

    ``tp`` and ``fp`` are the raw counts at every point, so ties between
    operating points can be compared exactly.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    n_pos: int
    n_neg: int

    def __len__(self) -> int:
        return int(self.thresholds.size)

    def points(self) -> RocPoints:
        return RocPoints(fpr=self.fpr.tolist(), tpr=self.tpr.tolist())


def _checked(scores: Sequence[float], labels: LabelLike):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = as_binary_labels(labels)
    if s.size != y.size:
        raise ShapeError(f"{s.size} scores but {y.size} labels")
    check_finite(s, "scores")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise InputValidationError(
            "ROC analysis needs both nominal and anomalous samples"
        )
    return s, y, n_pos, int(y.size) - n_pos


def roc_curve(scores: Sequence[float], labels: LabelLike) -> RocCurve:
    """Sweep every distinct score; equal scores move together

    Candidate thresholds are ``+inf``, the midpoints between adjacent distinct
    scores (descending) and ``-inf``.

    Raises:
        InputValidationError: Only one class present or non-finite scores
    """
    s, y, n_pos, n_neg = _checked(scores, labels)
    fpr, tpr, cuts = skm.roc_curve(y, s, drop_intermediate=False)
    # cuts[0] is a sentinel above every score, the rest are the distinct scores
    distinct = cuts[1:]
    tp = np.rint(tpr * n_pos).astype(np.int64)
    fp = np.rint(fpr * n_neg).astype(np.int64)
    upper, lower = distinct[:-1], distinct[1:]
    midpoints = upper + (lower - upper) / 2.0
    # adjacent doubles can round the midpoint up onto the upper score
    midpoints = np.where(midpoints >= upper, lower, midpoints)
    thresholds = np.concatenate([[np.inf], midpoints, [-np.inf]])
    return RocCurve(
        fpr=fp / n_neg,
        tpr=tp / n_pos,
        thresholds=thresholds,
        tp=tp,
        fp=fp,
        n_pos=n_pos,
        n_neg=n_neg,
    )


def auroc_from_curve(curve: RocCurve) -> float:
    """Trapezoidal area under the curve"""
    return float(skm.auc(curve.fpr, curve.tpr))


def auroc(scores: Sequence[float], labels: LabelLike) -> float:
    """P(score_pos > score_neg) + P(tie) / 2

    Raises:
        InputValidationError: Only one class present
    """
    s, y, _, _ = _checked(scores, labels)
    return float(skm.roc_auc_score(y, s))


def _objective(
    curve: RocCurve,
    criterion: ThresholdCriterion,
    cost_fp: float,
    cost_fn: float,
) -> np.ndarray:
    """Per-point objective, larger is better"""
    n_pos, n_neg = curve.n_pos, curve.n_neg
    if criterion == ThresholdCriterion.YOUDEN:
        # (tpr - fpr) * n_pos * n_neg in exact integers
        return curve.tp * n_neg - curve.fp * n_pos
    if criterion == ThresholdCriterion.SENSITIVITY_SPECIFICITY:
        # -|tpr - (1 - fpr)| * n_pos * n_neg
        return -np.abs(curve.tp * n_neg - (n_neg - curve.fp) * n_pos)
    # expected cost with class priors estimated from the partition:
    # c_fp * fpr * pi_neg + c_fn * (1 - tpr) * pi_pos
    return -(cost_fp * curve.fp + cost_fn * (n_pos - curve.tp)) / (n_pos + n_neg)


def _objective_value(
    curve: RocCurve, index: int, criterion: ThresholdCriterion, raw: np.ndarray
) -> float:
    scale = curve.n_pos * curve.n_neg
    if criterion == ThresholdCriterion.YOUDEN:
        return float(raw[index]) / scale
    if criterion == ThresholdCriterion.SENSITIVITY_SPECIFICITY:
        return float(-raw[index]) / scale
    return float(-raw[index])


def select_threshold(
    curve: RocCurve,
    criterion: ThresholdCriterion = ThresholdCriterion.YOUDEN,
    cost_fp: float = 1.0,
    cost_fn: float = 1.0,
) -> ThresholdRule:
    """Pick the operating point that optimizes ``criterion``

    - youden: maximize tpr - fpr
    - sensitivity-specificity: minimize |sensitivity - specificity|
    - cost: minimize c_fp * fpr * pi_neg + c_fn * (1 - tpr) * pi_pos

    Ties go to the smaller fpr, then the larger threshold. Along the curve fpr
    never decreases while the threshold strictly decreases, so this is the
    first optimal point.

    The rule's ``objective`` is J for youden, |sens - spec| for the trade-off
    and the expected cost for the cost criterion.
    """
    raw = _objective(curve, criterion, cost_fp, cost_fn)
    index = int(np.argmax(raw))
    rule = ThresholdRule(
        criterion=criterion,
        tau=float(curve.thresholds[index]),
        tpr=float(curve.tpr[index]),
        fpr=float(curve.fpr[index]),
        objective=_objective_value(curve, index, criterion, raw),
    )
    logger.debug(
        "Selected threshold %s", rule.tau, extra={"criterion": criterion.value}
    )
    return rule
