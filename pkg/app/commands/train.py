"""adwb train: fit a detector on nominal features and save a checkpoint"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import typer

from app.core.config import RunConfig, config_hash
from app.dataprep.manifest import load_manifest
from app.detectors.base import DetectorKind
from app.detectors.feature_store import FeatureStore
from app.detectors.learned import DiscriminatorDetector, FlowDetector
from app.features.storage import read_features
from app.helpers.constants import FEATURE_SUFFIX
from app.helpers.errors import InputValidationError
from app.helpers.storage import write_history_csv

from .common import command_errors, effective_config, record_outputs

logger = logging.getLogger(__name__)

NAME = "train"

TrainableDetector = Union[FlowDetector, DiscriminatorDetector]


def history_path(model: Path) -> Path:
    return model.with_suffix(".history.csv")


def _build(
    kind: DetectorKind, cfg: RunConfig, store: Optional[FeatureStore]
) -> TrainableDetector:
    if kind == DetectorKind.FLOW:
        return FlowDetector(cfg, store, cfg.seed)
    if kind == DetectorKind.DISCRIMINATOR:
        return DiscriminatorDetector(cfg, store, cfg.seed)
    raise InputValidationError(f"detector {kind.value!r} cannot be trained")


def command(
    ctx: typer.Context,
    features_dir: Path = typer.Argument(..., help="Directory of .adwf feature files"),
    out: Path = typer.Argument(..., help="Checkpoint to write"),
    detector: DetectorKind = typer.Option(DetectorKind.FLOW, "--detector"),
    manifest: Optional[Path] = typer.Option(
        None, "--manifest", help="Train on the nominal records of this manifest only"
    ),
    epochs: Optional[int] = typer.Option(None, "--epochs", min=0),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", min=1),
) -> None:
    """Train a flow or discriminator; writes the checkpoint and its loss history"""
    with command_errors(NAME):
        section = "train" if detector == DetectorKind.FLOW else "discriminator"
        cfg = effective_config(
            ctx,
            {
                section: {
                    "epochs": epochs,
                    "learning_rate": learning_rate,
                    "batch_size": batch_size,
                }
            },
        )
        inputs: List[Path]
        if manifest is not None:
            dataset = load_manifest(manifest, check_files=False)
            store = FeatureStore(features_dir, dataset.root, cfg.extractor)
            model = _build(detector, cfg, store)
            model.fit(dataset.nominal)
            inputs = [manifest, *store.feature_files(dataset.nominal)]
        else:
            inputs = sorted(features_dir.glob(f"*{FEATURE_SUFFIX}"))
            model = _build(detector, cfg, None)
            model.fit_features([read_features(p) for p in inputs])

        meta = {
            "run_config": cfg.model_dump(mode="json"),
            "config_hash": config_hash(cfg),
        }
        model.save(out, meta)
        history = write_history_csv(history_path(out), model.history)
        record_outputs(out, NAME, cfg, inputs, [out, history])
        final = model.history[-1].loss if model.history else None
        logger.info(
            "Saved %s checkpoint %s",
            detector.value,
            out,
            extra={"epochs": len(model.history), "final_loss": final},
        )
