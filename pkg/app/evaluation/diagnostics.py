"""Where does a detector put its anomaly mass?"""

from typing import Optional

import numpy as np

from app.helpers.errors import InputValidationError
from app.helpers.validators import check_same_shape


def background_score_fraction(localization: np.ndarray, fg_mask: np.ndarray) -> float:
    """Share of the map's total mass that lies on background positions

    0 when the map sums to 0. Maps are expected to be non-negative.

    Raises:
        ShapeError: Map and mask sizes differ
    """
    values = np.asarray(localization, dtype=np.float64)
    mask = np.asarray(fg_mask, dtype=bool)
    check_same_shape(values, mask, "localization map and foreground mask")
    total = float(values.sum())
    if total == 0.0:
        return 0.0
    return float(values[~mask].sum()) / total


def binarize_at_quantile(localization: np.ndarray, quantile: float) -> np.ndarray:
    """Positions whose value exceeds the map's own ``quantile``"""
    if not 0.0 <= quantile < 1.0:
        raise InputValidationError(f"quantile must be in [0, 1), got {quantile}")
    values = np.asarray(localization, dtype=np.float64)
    return values > np.quantile(values, quantile)


def localization_overlap(
    localization: np.ndarray,
    defect_mask: Optional[np.ndarray],
    quantile: float = 0.9,
) -> float:
    """Intersection over union of the binarized map and the true defect

    Raises:
        InputValidationError: No defect mask (nominal sample)
        ShapeError: Map and mask sizes differ
    """
    if defect_mask is None:
        raise InputValidationError("localization overlap needs a defect mask")
    truth = np.asarray(defect_mask, dtype=bool)
    check_same_shape(
        np.asarray(localization), truth, "localization map and defect mask"
    )
    predicted = binarize_at_quantile(localization, quantile)
    union = int(np.sum(predicted | truth))
    if union == 0:
        return 0.0
    return int(np.sum(predicted & truth)) / union
