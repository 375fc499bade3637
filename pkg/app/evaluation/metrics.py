"""Thresholded classification and confusion-matrix metrics"""

from typing import Optional, Sequence

import numpy as np

from app.helpers.errors import ShapeError
from app.helpers.schemas import ConfusionMetrics

from .roc import LabelLike, as_binary_labels


def classify(scores: Sequence[float], tau: float) -> np.ndarray:
    """Anomalous iff score > tau; +inf flags nothing, -inf flags everything"""
    return np.asarray(scores, dtype=np.float64) > tau


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    if denominator == 0:
        return None
    return numerator / denominator


def confusion_metrics(predicted: LabelLike, truth: LabelLike) -> ConfusionMetrics:
    """Counts plus derived rates; 0/0 rates are None (undefined)

    Raises:
        ShapeError: predicted and truth differ in length
    """
    pred = as_binary_labels(predicted)
    true = as_binary_labels(truth)
    if pred.size != true.size:
        raise ShapeError(f"{pred.size} predictions but {true.size} labels")

    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    tn = int(np.sum(~pred & ~true))
    fn = int(np.sum(~pred & true))

    tpr = _ratio(tp, tp + fn)
    fpr = _ratio(fp, fp + tn)
    tnr = _ratio(tn, tn + fp)
    balanced = None if tpr is None or tnr is None else (tpr + tnr) / 2.0
    return ConfusionMetrics(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        tpr=tpr,
        fpr=fpr,
        precision=_ratio(tp, tp + fp),
        recall=tpr,
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
        accuracy=_ratio(tp + tn, tp + fp + tn + fn),
        balanced_accuracy=balanced,
    )
