"""ROC analysis, metrics, the risk-estimation protocol and its reports"""

from .bootstrap import bootstrap_ci
from .diagnostics import background_score_fraction, localization_overlap
from .metrics import classify, confusion_metrics
from .protocol import run_fold, run_protocol
from .reporting import load_report, summary_markdown, write_report, write_report_bundle
from .roc import RocCurve, auroc, roc_curve, select_threshold

__all__ = [
    "RocCurve",
    "auroc",
    "background_score_fraction",
    "bootstrap_ci",
    "classify",
    "confusion_metrics",
    "load_report",
    "localization_overlap",
    "roc_curve",
    "run_fold",
    "run_protocol",
    "select_threshold",
    "summary_markdown",
    "write_report",
    "write_report_bundle",
]
