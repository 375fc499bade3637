"""adwb prep: masking, center-embedding and rotation of a dataset"""

import logging
from pathlib import Path
from typing import List, Optional

import typer

from app.core.config import config_hash
from app.dataprep.manifest import (
    DatasetManifest,
    load_manifest,
    load_samples,
    write_samples,
)
from app.dataprep.transforms import center_embed_samples, mask_samples, rotate_augment
from app.helpers.constants import MANIFEST_FILENAME
from app.helpers.schemas import CanvasSpec, ManifestHeader
from app.helpers.storage import atomic_write_bytes
from app.helpers.validators import parse_angles

from .common import command_errors, effective_config, record_outputs

logger = logging.getLogger(__name__)

NAME = "prep"


def _copy_dataset(
    manifest: DatasetManifest, source_manifest: Path, out_dir: Path
) -> List[Path]:
    """Copy the manifest and every file it references, byte for byte"""
    pairs = [(manifest.resolve(r), out_dir / r) for r in _relative_files(manifest)]
    pairs.append((source_manifest, out_dir / MANIFEST_FILENAME))
    return [
        atomic_write_bytes(target, source.read_bytes())
        for source, target in pairs
        if source.resolve() != target.resolve()
    ]


def _relative_files(manifest: DatasetManifest) -> List[str]:
    return [
        relative
        for record in manifest.records
        for relative in (record.image, record.mask, record.defect_mask)
        if relative is not None
    ]


def command(
    ctx: typer.Context,
    manifest: Path = typer.Argument(..., help="Input manifest (JSONL)"),
    out_dir: Path = typer.Argument(
        ..., help="Directory for images and the new manifest"
    ),
    mask: bool = typer.Option(False, "--mask", help="Zero every background pixel"),
    center_embed: bool = typer.Option(
        False, "--center-embed", help="Center each object on a shared canvas"
    ),
    rotate: Optional[str] = typer.Option(
        None, "--rotate", help="Extra rotated copies, e.g. 90,180,270"
    ),
) -> None:
    """Prepare a dataset: mask, center-embed and rotate according to the flags"""
    with command_errors(NAME):
        cfg = effective_config(ctx)
        angles = parse_angles(rotate)
        dataset = load_manifest(manifest)

        if not (mask or center_embed or angles):
            outputs = _copy_dataset(dataset, manifest, out_dir)
            inputs = [manifest, *dataset.files()]
            record_outputs(out_dir / MANIFEST_FILENAME, NAME, cfg, inputs, outputs)
            logger.info("Copied %d records to %s", len(dataset), out_dir)
            return

        samples = load_samples(dataset)
        canvas: Optional[CanvasSpec] = dataset.header.canvas if dataset.header else None
        if mask:
            samples = mask_samples(samples)
        if center_embed:
            samples, canvas = center_embed_samples(samples)
        if angles:
            samples = rotate_augment(samples, angles)

        settings = {"mask": mask, "center_embed": center_embed, "rotate": list(angles)}
        header = ManifestHeader(
            canvas=canvas,
            config_hash=config_hash(cfg),
            config={"prep": settings, **cfg.model_dump(mode="json")},
        )
        prepared = write_samples(samples, out_dir, header)
        out_manifest = out_dir / MANIFEST_FILENAME
        record_outputs(
            out_manifest, NAME, cfg, [manifest, *dataset.files()], [out_manifest]
        )
        logger.info(
            "Prepared %d samples in %s",
            len(prepared),
            out_dir,
            extra={"prep": settings, "canvas": canvas.model_dump() if canvas else None},
        )
