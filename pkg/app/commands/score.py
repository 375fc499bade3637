"""adwb score: anomaly scores (and optional localization maps) to CSV"""

import logging
from functools import partial
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import typer

from app.dataprep.manifest import load_manifest
from app.detectors.base import DetectorKind, make_detector
from app.detectors.checkpoint import load_checkpoint
from app.detectors.feature_store import FeatureStore
from app.detectors.learned import DiscriminatorDetector, FlowDetector, load_detector
from app.features.extractor import MultiScaleFeatures
from app.features.storage import read_features, write_map
from app.helpers.constants import FEATURE_SUFFIX
from app.helpers.errors import InputValidationError, ShapeError
from app.helpers.schemas import Label, ScoreRecord
from app.helpers.storage import write_score_csv

from .common import command_errors, effective_config, record_outputs

logger = logging.getLogger(__name__)

NAME = "score"

# (sample id, label, lazy feature loader)
ScoreItem = Tuple[str, Optional[Label], Callable[[], MultiScaleFeatures]]


def _directory_items(features_dir: Path) -> List[ScoreItem]:
    return [
        (path.stem, None, partial(read_features, path))
        for path in sorted(features_dir.glob(f"*{FEATURE_SUFFIX}"))
    ]


def _score_items(
    detector: Union[FlowDetector, DiscriminatorDetector],
    items: List[ScoreItem],
    maps_dir: Optional[Path],
) -> Tuple[List[ScoreRecord], List[Path]]:
    records, maps = [], []
    for sample_id, label, load in items:
        try:
            features = load()
            value = detector.score_features(features)
            if maps_dir is not None:
                target = maps_dir / f"{sample_id}{FEATURE_SUFFIX}"
                maps.append(write_map(target, detector.localization(features)))
        except ShapeError as e:
            raise ShapeError(f"sample {sample_id}: {e.message}") from e
        records.append(ScoreRecord(sample_id=sample_id, label=label, score=value))
    return records, maps


def command(
    ctx: typer.Context,
    out: Path = typer.Argument(..., help="Score CSV to write"),
    model: Optional[Path] = typer.Option(None, "--model", help="Trained checkpoint"),
    detector: Optional[DetectorKind] = typer.Option(
        None, "--detector", help="Reference detector used instead of a checkpoint"
    ),
    manifest: Optional[Path] = typer.Option(
        None, "--manifest", help="Samples to score"
    ),
    features_dir: Optional[Path] = typer.Option(
        None, "--features-dir", help="Directory of .adwf files"
    ),
    maps_dir: Optional[Path] = typer.Option(
        None, "--maps-dir", help="Write one localization map per sample here"
    ),
) -> None:
    """Score samples from a manifest or a feature directory"""
    with command_errors(NAME):
        cfg = effective_config(ctx)
        if (model is None) == (detector is None):
            raise InputValidationError("give exactly one of --model and --detector")
        if manifest is None and features_dir is None:
            raise InputValidationError("give --manifest and/or --features-dir")

        inputs: List[Path] = []
        maps: List[Path] = []
        if detector is not None:
            if detector.trainable:
                raise InputValidationError(
                    f"{detector.value} detectors are scored from a --model checkpoint"
                )
            if manifest is None:
                raise InputValidationError(
                    "reference detectors need a labeled --manifest"
                )
            if maps_dir is not None:
                raise InputValidationError("reference detectors produce no maps")
            dataset = load_manifest(manifest, check_files=False)
            inputs = [manifest]
            scores = make_detector(detector, cfg.seed).score(dataset.records)
        else:
            assert model is not None
            trained = load_detector(load_checkpoint(model))
            inputs = [model]
            if manifest is not None:
                dataset = load_manifest(manifest, check_files=features_dir is None)
                store = FeatureStore(features_dir, dataset.root, cfg.extractor)
                items: List[ScoreItem] = [
                    (r.sample_id, r.label, partial(store.load, r))
                    for r in dataset.records
                ]
                inputs += [manifest, *store.feature_files(dataset.records)]
            else:
                assert features_dir is not None
                items = _directory_items(features_dir)
                inputs += sorted(features_dir.glob(f"*{FEATURE_SUFFIX}"))
            scores, maps = _score_items(trained, items, maps_dir)

        write_score_csv(out, scores)
        record_outputs(out, NAME, cfg, inputs, [out, *maps])
        logger.info(
            "Scored %d samples into %s", len(scores), out, extra={"maps": len(maps)}
        )
