"""adwb report: SVG plots and a markdown summary for a risk report"""

import logging
from pathlib import Path

import typer

from app.evaluation.reporting import load_report, write_report_bundle

from .common import command_errors, effective_config, record_outputs

logger = logging.getLogger(__name__)

NAME = "report"


def command(
    ctx: typer.Context,
    report: Path = typer.Argument(..., help="Risk report JSON from adwb protocol"),
    out_dir: Path = typer.Argument(..., help="Directory for the plots and summary"),
) -> None:
    """Render ROC curves, score histograms and per-fold bars"""
    with command_errors(NAME):
        cfg = effective_config(ctx)
        loaded = load_report(report)
        outputs = write_report_bundle(loaded, out_dir)
        record_outputs(out_dir / NAME, NAME, cfg, [report], outputs)
        logger.info("Rendered %d files into %s", len(outputs), out_dir)
