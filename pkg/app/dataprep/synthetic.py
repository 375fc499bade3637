"""Procedural datasets with known ground truth

- score-only manifests for calibrating the evaluation protocol
- many-images-per-object manifests for leakage checks
- asymmetric shapes (rotation experiments) with optional surface defects
- shapes at one or two alternating positions (silhouette experiments)
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from PIL import Image as PILImage, ImageDraw

from app.helpers.constants import MANIFEST_FILENAME
from app.helpers.imageio import write_image
from app.helpers.schemas import Label, SampleRecord
from app.numerics.rng import RngStream, seeded_rng

from .manifest import DatasetManifest, LoadedSample, write_manifest

logger = logging.getLogger(__name__)

PLACEHOLDER_IMAGE = "blank.png"
SHAPE_VALUE = 200
DEFECT_VALUE = 40


def score_manifest(
    n_nominal: int, n_anomalous: int, root: Union[str, Path] = "."
) -> DatasetManifest:
    """One object per record, all pointing at a placeholder image"""
    records = [
        SampleRecord(
            sample_id=f"nom{i:05d}",
            object_id=f"nom{i:05d}",
            label=Label.NOMINAL,
            image=PLACEHOLDER_IMAGE,
        )
        for i in range(n_nominal)
    ] + [
        SampleRecord(
            sample_id=f"anom{i:05d}",
            object_id=f"anom{i:05d}",
            label=Label.ANOMALOUS,
            image=PLACEHOLDER_IMAGE,
        )
        for i in range(n_anomalous)
    ]
    return DatasetManifest(records, Path(root))


def write_score_dataset(
    out_dir: Union[str, Path], n_nominal: int, n_anomalous: int
) -> Path:
    """Score manifest plus its placeholder image; returns the manifest path"""
    root = Path(out_dir)
    write_image(root / PLACEHOLDER_IMAGE, np.zeros((4, 4), dtype=np.uint8))
    manifest = score_manifest(n_nominal, n_anomalous, root)
    return write_manifest(manifest, root / MANIFEST_FILENAME)


def object_manifest(
    n_objects: int,
    images_per_object: int,
    anomalous_objects: int,
    rng: Optional[RngStream] = None,
) -> DatasetManifest:
    """Records only; anomalous objects mix nominal and anomalous images"""
    records = []
    for obj in range(n_objects):
        anomalous = obj < anomalous_objects
        for img in range(images_per_object):
            is_defect = anomalous and (
                rng is None or bool(rng.integers(0, 2)) or img == 0
            )
            records.append(
                SampleRecord(
                    sample_id=f"o{obj:04d}_{img:04d}",
                    object_id=f"o{obj:04d}",
                    label=Label.ANOMALOUS if is_defect else Label.NOMINAL,
                    image=f"o{obj:04d}_{img:04d}.png",
                )
            )
    return DatasetManifest(records)


def draw_shape(
    size: int, center: Tuple[int, int], extent: int, value: int = SHAPE_VALUE
) -> Tuple[np.ndarray, np.ndarray]:
    """An L-shaped object with a notch; no rotation maps it onto itself"""
    canvas = PILImage.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    cy, cx = center
    half = extent // 2
    bar = max(extent // 3, 1)
    top, left = cy - half, cx - half
    draw.rectangle([left, top, left + bar - 1, top + extent - 1], fill=value)
    bottom, right = top + extent - 1, left + extent - 1
    draw.rectangle([left, bottom - bar + 1, right, bottom], fill=value)
    draw.rectangle([left + bar, top, left + bar + bar // 2, top + bar // 2], fill=value)
    image = np.asarray(canvas, dtype=np.uint8).copy()
    gradient = np.linspace(0.8, 1.0, size)[None, :]
    image = np.where(image > 0, np.round(image * gradient), 0).astype(np.uint8)
    return image, image > 0


def add_defect(
    image: np.ndarray, mask: np.ndarray, rng: RngStream, radius: int = 2
) -> Tuple[np.ndarray, np.ndarray]:
    """Dark round blotch centered on a random foreground pixel"""
    ys, xs = np.nonzero(mask)
    pick = int(rng.integers(0, ys.size))
    cy, cx = int(ys[pick]), int(xs[pick])
    rows, cols = np.mgrid[0 : image.shape[0], 0 : image.shape[1]]
    defect = ((rows - cy) ** 2 + (cols - cx) ** 2 <= radius * radius) & mask
    out = image.copy()
    out[defect] = DEFECT_VALUE
    return out, defect


def shape_samples(
    n_nominal: int,
    n_anomalous: int,
    size: int = 32,
    extent: int = 16,
    seed: int = 0,
    angle: int = 0,
    prefix: str = "shape",
) -> List[LoadedSample]:
    """Centered asymmetric shapes, anomalous ones with a surface defect"""
    rng = seeded_rng(seed)
    center = (size // 2, size // 2)
    samples = []
    for i in range(n_nominal + n_anomalous):
        anomalous = i >= n_nominal
        image, mask = draw_shape(size, center, extent)
        defect = None
        if anomalous:
            image, defect = add_defect(image, mask, rng.child(i))
        k = (angle // 90) % 4
        image, mask = np.rot90(image, k).copy(), np.rot90(mask, k).copy()
        if defect is not None:
            defect = np.rot90(defect, k).copy()
        sid = f"{prefix}{i:04d}"
        samples.append(
            LoadedSample(
                SampleRecord(
                    sample_id=sid,
                    object_id=sid,
                    label=Label.ANOMALOUS if anomalous else Label.NOMINAL,
                    image=f"images/{sid}.png",
                    mask=f"masks/{sid}.png",
                    defect_mask=f"defects/{sid}.png" if anomalous else None,
                ),
                image,
                mask,
                defect,
            )
        )
    return samples


def position_samples(
    n: int,
    size: int = 32,
    extent: int = 10,
    two_positions: bool = True,
    prefix: str = "pos",
) -> List[LoadedSample]:
    """Nominal shapes at one fixed position or alternating between two"""
    left = (size // 2, size // 4)
    right = (size // 2, 3 * size // 4)
    samples = []
    for i in range(n):
        center = right if two_positions and i % 2 else left
        image, mask = draw_shape(size, center, extent)
        sid = f"{prefix}{i:04d}"
        samples.append(
            LoadedSample(
                SampleRecord(
                    sample_id=sid,
                    object_id=sid,
                    label=Label.NOMINAL,
                    image=f"images/{sid}.png",
                    mask=f"masks/{sid}.png",
                ),
                image,
                mask,
            )
        )
    return samples
