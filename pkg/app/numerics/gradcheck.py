"""Central finite-difference verification of analytic gradients"""

import logging
from typing import Callable, Tuple

import numpy as np

from app.helpers.errors import NumericalError

logger = logging.getLogger(__name__)

ValueAndGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def numerical_gradient(
    f: Callable[[np.ndarray], float], point: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """Central differences of a scalar function, one coordinate at a time"""
    x = np.array(point, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = float(f(x))
        flat[i] = original - h
        lower = float(f(x))
        flat[i] = original
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NumericalError(f"non-finite evaluation at coordinate {i}")
        grad_flat[i] = (upper - lower) / (2.0 * h)
    return grad


def grad_check(f: ValueAndGrad, point: np.ndarray, h: float = 1e-6) -> float:
    """Max over coordinates of |analytic - numerical| / max(1, |analytic|)

    Args:
        f: Returns (value, analytic gradient) at a point
        point: Where to compare
        h: Finite-difference step

    Raises:
        NumericalError: If f is not finite near ``point``
    """
    value, analytic = f(np.array(point, dtype=np.float64))
    if not np.isfinite(value):
        raise NumericalError("non-finite value at the check point")
    numeric = numerical_gradient(lambda p: f(p)[0], point, h)
    analytic = np.asarray(analytic, dtype=np.float64).reshape(numeric.shape)
    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    worst = float(error.max()) if error.size else 0.0
    logger.debug("gradient check: %d coordinates, max error %.3e", error.size, worst)
    return worst
