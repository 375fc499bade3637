"""adwb protocol: repeated three-way-split risk estimation"""

import logging
from pathlib import Path
from typing import Optional

import typer

from app.dataprep.manifest import load_manifest
from app.detectors.base import DetectorKind, detector_factory
from app.detectors.feature_store import FeatureStore
from app.evaluation.protocol import run_protocol
from app.evaluation.reporting import summary_markdown, write_report
from app.helpers.errors import ProtocolFailedError
from app.helpers.schemas import RiskReport, ThresholdCriterion
from app.helpers.storage import atomic_write_text
from app.helpers.strings import format_metric

from .common import command_errors, effective_config, record_outputs

logger = logging.getLogger(__name__)

NAME = "protocol"


def _write(report: RiskReport, out: Path) -> Path:
    write_report(report, out)
    return atomic_write_text(out.with_suffix(".md"), summary_markdown(report))


def command(
    ctx: typer.Context,
    manifest: Path = typer.Argument(..., help="Labeled manifest (JSONL)"),
    out: Path = typer.Argument(..., help="Risk report JSON to write"),
    detector: DetectorKind = typer.Option(DetectorKind.FLOW, "--detector"),
    folds: Optional[int] = typer.Option(None, "--folds", "-k", min=1),
    criterion: Optional[ThresholdCriterion] = typer.Option(None, "--criterion"),
    features_dir: Optional[Path] = typer.Option(
        None, "--features-dir", help="Precomputed .adwf files"
    ),
) -> None:
    """Split, train, pick a threshold and evaluate K times; exit 2 if any fold fails"""
    with command_errors(NAME):
        cfg = effective_config(
            ctx, {"protocol": {"folds": folds, "criterion": criterion}}
        )
        dataset = load_manifest(manifest, check_files=detector.trainable)
        store = None
        if detector.trainable:
            store = FeatureStore(features_dir, dataset.root, cfg.extractor)
        factory = detector_factory(detector, cfg, store)
        summary = out.with_suffix(".md")
        try:
            report = run_protocol(
                dataset,
                factory,
                cfg.protocol,
                cfg.seed,
                jobs=cfg.jobs,
                model=detector.value,
                dataset=manifest.parent.name or None,
                config=cfg.model_dump(mode="json"),
            )
        except ProtocolFailedError as e:
            _write(e.partial_report, out)
            record_outputs(out, NAME, cfg, [manifest], [out, summary])
            raise

        _write(report, out)
        record_outputs(out, NAME, cfg, [manifest], [out, summary])
        logger.info(
            "Wrote %s (mean AUROC %s)",
            out,
            format_metric(report.summary_for("auroc_inference").mean),
            extra={"folds": len(report.fold_reports), "detector": detector.value},
        )
