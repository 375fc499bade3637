"""Validation utilities"""

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import ROTATION_ANGLES
from .errors import InputValidationError, ShapeError


def validate_angles(angles: Optional[Iterable[int]]) -> Tuple[int, ...]:
    """Validate a set of right-angle rotations

    Args:
        angles: Rotation angles in degrees, or None for no rotation

    Returns:
        The angles as a sorted tuple (empty when none were given)

    Raises:
        InputValidationError: On duplicates or unsupported angles
    """
    if not angles:
        return ()
    angle_list = [int(a) for a in angles]
    duplicates = sorted({a for a in angle_list if angle_list.count(a) > 1})
    if duplicates:
        raise InputValidationError(
            f"Duplicate rotation angle(s): {', '.join(map(str, duplicates))}"
        )
    invalid = [a for a in angle_list if a not in ROTATION_ANGLES]
    if invalid:
        raise InputValidationError(
            f"Invalid rotation angle(s): {', '.join(map(str, invalid))}. "
            f"Valid angles are: {', '.join(map(str, ROTATION_ANGLES))}"
        )
    return tuple(sorted(angle_list))


def parse_angles(text: Optional[str]) -> Tuple[int, ...]:
    """Parse a flag value such as ``"90,270"``"""
    if text is None or not text.strip():
        return ()
    parts: List[int] = []
    for token in text.split(","):
        token = token.strip().rstrip("°")
        try:
            parts.append(int(token))
        except ValueError as e:
            raise InputValidationError(
                f"Rotation angle {token!r} is not an integer"
            ) from e
    return validate_angles(parts)


def check_same_shape(
    a: np.ndarray, b: np.ndarray, what: str = "arrays", spatial: bool = False
) -> None:
    """Raise ShapeError unless the (spatial) shapes agree"""
    shape_a: Sequence[int] = a.shape[-2:] if spatial else a.shape
    shape_b: Sequence[int] = b.shape[-2:] if spatial else b.shape
    if tuple(shape_a) != tuple(shape_b):
        raise ShapeError(f"{what}: shapes {tuple(shape_a)} and {tuple(shape_b)} differ")


def check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InputValidationError(f"{what} contains non-finite values")
