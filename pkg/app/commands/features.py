"""adwb features: one ADWF feature file per manifest record"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import typer

from app.dataprep.manifest import DatasetManifest, load_manifest
from app.detectors.feature_store import feature_path
from app.features.extractor import get_extractor
from app.features.storage import write_features
from app.helpers.imageio import read_image
from app.helpers.schemas import ExtractorConfig, SampleRecord

from .common import command_errors, effective_config, record_outputs, state_of

logger = logging.getLogger(__name__)

NAME = "features"


def _extract_one(
    dataset: DatasetManifest,
    record: SampleRecord,
    cfg: ExtractorConfig,
    out_dir: Path,
    force: bool,
) -> Optional[Path]:
    target = feature_path(out_dir, record.sample_id)
    if target.exists() and not force:
        logger.debug("Keeping existing %s", target)
        return None
    features = get_extractor(cfg).extract(read_image(dataset.resolve(record.image)))
    return write_features(target, features)


def command(
    ctx: typer.Context,
    manifest: Path = typer.Argument(..., help="Input manifest (JSONL)"),
    out_dir: Path = typer.Argument(..., help="Directory for <sample_id>.adwf files"),
    num_filters: Optional[int] = typer.Option(None, "--num-filters", min=1),
    kernel_size: Optional[int] = typer.Option(None, "--kernel-size", min=1),
    pool_size: Optional[int] = typer.Option(None, "--pool-size", min=1),
) -> None:
    """Extract frozen multi-scale features; existing files are kept unless --force"""
    with command_errors(NAME):
        cfg = effective_config(
            ctx,
            {
                "extractor": {
                    "num_filters": num_filters,
                    "kernel_size": kernel_size,
                    "pool_size": pool_size,
                }
            },
        )
        force = state_of(ctx).force
        dataset = load_manifest(manifest)
        out_dir.mkdir(parents=True, exist_ok=True)

        def run(record: SampleRecord) -> Optional[Path]:
            return _extract_one(dataset, record, cfg.extractor, out_dir, force)

        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(pool.map(run, dataset.records))
        else:
            results = [run(r) for r in dataset.records]

        written = [p for p in results if p is not None]
        outputs = [feature_path(out_dir, r.sample_id) for r in dataset.records]
        record_outputs(out_dir / NAME, NAME, cfg, [manifest, *dataset.files()], outputs)
        logger.info(
            "Wrote %d feature files, kept %d",
            len(written),
            len(results) - len(written),
            extra={"out_dir": str(out_dir)},
        )
