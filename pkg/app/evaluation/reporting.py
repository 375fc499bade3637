"""Risk-report serialization, markdown summaries and SVG plots

Plots are drawn on standalone ``Figure`` objects (no pyplot state) and saved
without a date and with a fixed hash salt, so identical reports give
identical SVG bytes.
"""

import io
import logging
from pathlib import Path
from typing import List, Sequence, Union

import matplotlib
from matplotlib.figure import Figure
from pydantic import ValidationError

from app.helpers.constants import FOLD_METRICS
from app.helpers.errors import InputValidationError
from app.helpers.schemas import FoldReport, Label, RiskReport
from app.helpers.storage import atomic_write_bytes, atomic_write_text
from app.helpers.strings import (
    count_noun,
    format_ci,
    format_metric,
    format_percent,
    markdown_table,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SVG_HASH_SALT = "anomaly-workbench"
HEADLINE_METRIC = "auroc_inference"
ROC_FILENAME = "roc.svg"
SCORES_FILENAME = "scores.svg"
FOLDS_FILENAME = "folds.svg"
SUMMARY_FILENAME = "summary.md"


def report_json(report: RiskReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def write_report(report: RiskReport, path: PathLike) -> Path:
    return atomic_write_text(path, report_json(report))


def load_report(path: PathLike) -> RiskReport:
    """Raises InputValidationError for unreadable or malformed reports"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputValidationError(f"Cannot read report {path}: {e}") from e
    try:
        return RiskReport.model_validate_json(text)
    except ValidationError as e:
        raise InputValidationError(f"Malformed report {path}: {e}") from e


def headline_table(reports: Sequence[RiskReport]) -> str:
    """One row per (model, dataset): mean AUROC and its interval"""
    rows = []
    for report in reports:
        item = report.summary_for(HEADLINE_METRIC)
        rows.append(
            [
                report.model,
                report.dataset,
                format_metric(item.mean),
                format_ci(item.ci_lower, item.ci_upper),
            ]
        )
    level = reports[0].summary_for(HEADLINE_METRIC).ci_level if reports else 0.95
    header = ["Model", "Dataset", "AUROC", f"{format_percent(level)} CI"]
    return markdown_table(header, rows)


def metrics_table(report: RiskReport) -> str:
    rows = [
        [
            item.name,
            format_metric(item.mean),
            format_metric(item.std),
            format_ci(item.ci_lower, item.ci_upper),
            str(item.defined_folds),
        ]
        for item in report.summary
    ]
    return markdown_table(["Metric", "Mean", "Std", "CI", "Folds"], rows)


def summary_markdown(report: RiskReport) -> str:
    parts = [
        f"# {report.model} on {report.dataset}\n",
        f"{count_noun(report.folds, 'fold')}, seed {report.seed}, "
        f"threshold criterion {report.criterion.value}\n",
        headline_table([report]),
        metrics_table(report),
    ]
    if report.failures:
        rows = [[str(f.fold), str(f.exit_code), f.error] for f in report.failures]
        parts.append("## Failed folds\n")
        parts.append(markdown_table(["Fold", "Exit", "Error"], rows))
    return "\n".join(parts)


def _svg_bytes(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def roc_figure(report: RiskReport) -> Figure:
    """Inference-partition ROC of every fold plus the chance diagonal"""
    fig = Figure(figsize=(5, 5))
    ax = fig.subplots()
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=1)
    for fold in report.fold_reports:
        if fold.roc_inference is None:
            continue
        ax.plot(
            fold.roc_inference.fpr,
            fold.roc_inference.tpr,
            linewidth=1.2,
            label=f"fold {fold.fold} (AUROC {format_metric(fold.auroc_inference)})",
        )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title(f"ROC: {report.model} on {report.dataset}")
    if 0 < len(report.fold_reports) <= 10:
        ax.legend(loc="lower right", fontsize="small")
    return fig


def _class_scores(folds: Sequence[FoldReport], label: Label) -> List[float]:
    return [
        s
        for fold in folds
        for s, lbl in zip(fold.inference_scores, fold.inference_labels)
        if lbl == label
    ]


def classes_disjoint(report: RiskReport) -> bool:
    nominal = _class_scores(report.fold_reports, Label.NOMINAL)
    anomalous = _class_scores(report.fold_reports, Label.ANOMALOUS)
    return bool(nominal and anomalous) and max(nominal) < min(anomalous)


def histogram_figure(report: RiskReport, bins: int = 30) -> Figure:
    """Inference scores of all folds, one histogram per class"""
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    nominal = _class_scores(report.fold_reports, Label.NOMINAL)
    anomalous = _class_scores(report.fold_reports, Label.ANOMALOUS)
    values = nominal + anomalous
    if values:
        low, high = min(values), max(values)
        if low == high:
            low, high = low - 0.5, high + 0.5
        edges = [low + (high - low) * i / bins for i in range(bins + 1)]
        ax.hist(nominal, bins=edges, alpha=0.6, color="tab:blue", label="nominal")
        ax.hist(anomalous, bins=edges, alpha=0.6, color="tab:red", label="anomalous")
        ax.legend(loc="upper right", fontsize="small")
    if classes_disjoint(report):
        ax.text(
            0.02,
            0.95,
            f"disjoint: nominal <= {format_metric(max(nominal))} < "
            f"{format_metric(min(anomalous))} <= anomalous",
            transform=ax.transAxes,
            fontsize="small",
            verticalalignment="top",
        )
    ax.set_xlabel("Anomaly score")
    ax.set_ylabel("Count")
    ax.set_title("Inference scores")
    return fig


def fold_bars_figure(report: RiskReport) -> Figure:
    """Per-fold bars of every aggregated metric"""
    folds = report.fold_reports
    names = [n for n in FOLD_METRICS if any(f.metric(n) is not None for f in folds)]
    fig = Figure(figsize=(8, 4))
    ax = fig.subplots()
    count = max(1, len(report.fold_reports))
    width = 0.8 / count
    for i, fold in enumerate(report.fold_reports):
        heights = [fold.metric(n) or 0.0 for n in names]
        positions = [j + i * width for j in range(len(names))]
        ax.bar(positions, heights, width=width, label=f"fold {fold.fold}")
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(names))])
    ax.set_xticklabels(
        names, rotation=30, horizontalalignment="right", fontsize="small"
    )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Value")
    ax.set_title("Metrics per fold")
    fig.subplots_adjust(bottom=0.3)
    return fig


def write_report_bundle(report: RiskReport, out_dir: PathLike) -> List[Path]:
    """ROC, score-histogram and fold-bar SVGs plus the markdown summary"""
    root = Path(out_dir)
    figures = [
        (ROC_FILENAME, roc_figure),
        (SCORES_FILENAME, histogram_figure),
        (FOLDS_FILENAME, fold_bars_figure),
    ]
    outputs = [
        atomic_write_bytes(root / name, _svg_bytes(draw(report)))
        for name, draw in figures
    ]
    outputs.append(atomic_write_text(root / SUMMARY_FILENAME, summary_markdown(report)))
    logger.info("Wrote %s to %s", count_noun(len(outputs), "report file"), root)
    return outputs
