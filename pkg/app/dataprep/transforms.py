"""Background removal, center-embedding and right-angle rotation"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.helpers.errors import InputValidationError, ShapeError
from app.helpers.schemas import CanvasSpec
from app.helpers.strings import angle_suffix
from app.helpers.validators import validate_angles

from .manifest import LoadedSample

logger = logging.getLogger(__name__)

# (top, left, bottom, right), bottom/right exclusive
BoundingBox = Tuple[int, int, int, int]


def apply_mask(image: np.ndarray, fg_mask: np.ndarray) -> np.ndarray:
    """Background pixels set to 0, foreground unchanged"""
    mask = np.asarray(fg_mask, dtype=bool)
    if image.shape[:2] != mask.shape:
        raise ShapeError(f"image {image.shape[:2]} and mask {mask.shape} differ")
    keep = mask if image.ndim == 2 else mask[..., None]
    return np.where(keep, image, 0).astype(image.dtype)


def bounding_box(mask: np.ndarray) -> Optional[BoundingBox]:
    """Tight box around the foreground; None for an empty mask"""
    rows = np.flatnonzero(np.any(mask, axis=1))
    cols = np.flatnonzero(np.any(mask, axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(cols[0]), int(rows[-1]) + 1, int(cols[-1]) + 1


def measure_canvas(masks: Iterable[Tuple[str, np.ndarray]]) -> CanvasSpec:
    """Componentwise maximum of the foreground bounding boxes

    Args:
        masks: (name, mask) pairs; the name identifies an empty mask

    Raises:
        InputValidationError: If any mask is empty or none are given
    """
    width = height = 0
    for name, mask in masks:
        box = bounding_box(np.asarray(mask, dtype=bool))
        if box is None:
            raise InputValidationError(f"mask of {name} has no foreground")
        top, left, bottom, right = box
        height = max(height, bottom - top)
        width = max(width, right - left)
    if width == 0:
        raise InputValidationError("no masks to measure a canvas from")
    return CanvasSpec(width=width, height=height)


def center_embed(
    image: np.ndarray, fg_mask: np.ndarray, canvas: CanvasSpec
) -> Tuple[np.ndarray, np.ndarray]:
    """Crop to the mask's bounding box and paste it centered on a zero canvas

    The top-left offset is ``((H - h) // 2, (W - w) // 2)``, so odd slack goes
    to the bottom/right. Pixels inside the box are kept as they are.
    """
    mask = np.asarray(fg_mask, dtype=bool)
    if image.shape[:2] != mask.shape:
        raise ShapeError(f"image {image.shape[:2]} and mask {mask.shape} differ")
    box = bounding_box(mask)
    if box is None:
        raise InputValidationError("cannot center an empty mask")
    top, left, bottom, right = box
    h, w = bottom - top, right - left
    if h > canvas.height or w > canvas.width:
        raise InputValidationError(
            f"object {w}x{h} does not fit the {canvas.width}x{canvas.height} canvas"
        )

    oy, ox = (canvas.height - h) // 2, (canvas.width - w) // 2
    out_shape = (canvas.height, canvas.width) + image.shape[2:]
    out_image = np.zeros(out_shape, dtype=image.dtype)
    out_mask = np.zeros((canvas.height, canvas.width), dtype=bool)
    out_image[oy : oy + h, ox : ox + w] = image[top:bottom, left:right]
    out_mask[oy : oy + h, ox : ox + w] = mask[top:bottom, left:right]
    return out_image, out_mask


def rotate(array: Optional[np.ndarray], angle: int) -> Optional[np.ndarray]:
    """Counterclockwise rotation by a multiple of 90 degrees (lossless)"""
    if array is None:
        return None
    return np.ascontiguousarray(np.rot90(array, k=(angle // 90) % 4, axes=(0, 1)))


def rotate_augment(
    samples: Sequence[LoadedSample], angles: Iterable[int], strict: bool = True
) -> List[LoadedSample]:
    """Originals followed by one rotated copy per angle

    Copies keep object id and label; the sample id gains ``_rot<angle>``.

    Raises:
        InputValidationError: Duplicate or unsupported angles; quarter turns
            of non-square images in strict mode
    """
    valid = validate_angles(list(angles))
    out = list(samples)
    if not valid:
        return out
    for sample in samples:
        for angle in valid:
            h, w = sample.image.shape[:2]
            if strict and angle % 180 and h != w:
                raise InputValidationError(
                    f"{sample.record.sample_id}: {angle} degree rotation of a "
                    f"non-square {w}x{h} image"
                )
            out.append(
                sample.with_arrays(
                    rotate(sample.image, angle),  # type: ignore[arg-type]
                    rotate(sample.mask, angle),
                    rotate(sample.defect_mask, angle),
                    sample_id=sample.record.sample_id + angle_suffix(angle),
                )
            )
    logger.info(
        "Rotation added %d samples", len(out) - len(samples), extra={"angles": valid}
    )
    return out


def mask_samples(samples: Sequence[LoadedSample]) -> List[LoadedSample]:
    out = []
    for sample in samples:
        if sample.mask is None:
            raise InputValidationError(f"{sample.record.sample_id} has no mask")
        out.append(
            sample.with_arrays(
                apply_mask(sample.image, sample.mask), sample.mask, sample.defect_mask
            )
        )
    return out


def center_embed_samples(
    samples: Sequence[LoadedSample], canvas: Optional[CanvasSpec] = None
) -> Tuple[List[LoadedSample], CanvasSpec]:
    """Center-embed every sample on a shared canvas (measured when not given)"""
    for sample in samples:
        if sample.mask is None:
            raise InputValidationError(f"{sample.record.sample_id} has no mask")
    if canvas is None:
        named = [(s.record.sample_id, s.mask) for s in samples]
        canvas = measure_canvas(named)  # type: ignore[arg-type]
    out = []
    for sample in samples:
        assert sample.mask is not None
        image, mask = center_embed(sample.image, sample.mask, canvas)
        defect = None
        if sample.defect_mask is not None:
            defect, _ = center_embed(
                sample.defect_mask.astype(np.uint8), sample.mask, canvas
            )
            defect = defect.astype(bool)
        out.append(sample.with_arrays(image, mask, defect))
    return out, canvas
