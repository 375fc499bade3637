"""Percentile bootstrap over fold values"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from app.helpers.constants import DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_CI_LEVEL
from app.helpers.errors import InputValidationError
from app.helpers.validators import check_finite
from app.numerics.rng import RngStream, seeded_rng

logger = logging.getLogger(__name__)


def bootstrap_ci(
    values: Sequence[float],
    resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
    level: float = DEFAULT_CI_LEVEL,
    rng: Optional[RngStream] = None,
) -> Tuple[float, float]:
    """Percentile interval of the mean of resampled fold values

    Args:
        values: One value per fold; folds are the independent unit
        resamples: Number of bootstrap resamples (B)
        level: Two-sided coverage, e.g. 0.95
        rng: Stream for the resampling (seed 0 when omitted)

    Returns:
        (lower, upper), clipped to the range of the values

    Raises:
        InputValidationError: Fewer than two values or an invalid level
    """
    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size < 2:
        raise InputValidationError(
            f"bootstrap needs at least 2 fold values, got {data.size}"
        )
    if not 0.0 < level < 1.0:
        raise InputValidationError(f"CI level must be in (0, 1), got {level}")
    if resamples < 1:
        raise InputValidationError("bootstrap needs at least one resample")
    check_finite(data, "fold values")

    stream = rng if rng is not None else seeded_rng(0)
    index = stream.integers(0, data.size, (resamples, data.size))
    means = data[index].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lower, upper = np.percentile(means, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    lo, hi = float(data.min()), float(data.max())
    return float(np.clip(lower, lo, hi)), float(np.clip(upper, lo, hi))
