"""Tests for report serialization, summaries and plots"""

import pytest

from app.dataprep.synthetic import score_manifest
from app.detectors.base import DetectorKind, detector_factory
from app.evaluation.protocol import run_protocol
from app.evaluation.reporting import (
    FOLDS_FILENAME,
    ROC_FILENAME,
    SCORES_FILENAME,
    SUMMARY_FILENAME,
    classes_disjoint,
    headline_table,
    load_report,
    report_json,
    summary_markdown,
    write_report,
    write_report_bundle,
)
from app.helpers.errors import InputValidationError
from app.helpers.schemas import FoldFailure, ProtocolConfig


def make_report(kind: DetectorKind, folds: int = 3, seed: int = 0):
    cfg = ProtocolConfig(folds=folds, bootstrap_resamples=100)
    return run_protocol(
        score_manifest(40, 12), detector_factory(kind), cfg, seed, model=kind.value
    )


@pytest.fixture(scope="module")
def gaussian_report():
    return make_report(DetectorKind.GAUSSIAN)


@pytest.fixture(scope="module")
def oracle_report():
    return make_report(DetectorKind.ORACLE)


def test_write_and_load_round_trip(tmp_path, gaussian_report):
    path = write_report(gaussian_report, tmp_path / "report.json")
    loaded = load_report(path)
    assert loaded == gaussian_report
    assert report_json(loaded) == path.read_text(encoding="utf-8")


def test_infinite_threshold_survives_json(tmp_path, oracle_report):
    report = oracle_report.model_copy(deep=True)
    report.fold_reports[0].tau = float("inf")
    loaded = load_report(write_report(report, tmp_path / "r.json"))
    assert loaded.fold_reports[0].tau == float("inf")


@pytest.mark.parametrize("content", [None, "{not json", '{"model": "x"}'])
def test_load_report_rejects(tmp_path, content):
    path = tmp_path / "bad.json"
    if content is not None:
        path.write_text(content, encoding="utf-8")
    with pytest.raises(InputValidationError):
        load_report(path)


def test_headline_table(gaussian_report, oracle_report):
    table = headline_table([oracle_report, gaussian_report])
    lines = table.splitlines()
    assert [c.strip() for c in lines[0].strip("|").split("|")] == [
        "Model",
        "Dataset",
        "AUROC",
        "95% CI",
    ]
    assert "| oracle" in lines[2] and "1.000" in lines[2]
    assert "| gaussian" in lines[3]


def test_summary_lists_every_metric(gaussian_report):
    text = summary_markdown(gaussian_report)
    assert text.startswith("# gaussian on ")
    assert "3 folds, seed 0, threshold criterion youden" in text
    for name in ("auroc_inference", "balanced_accuracy", "f1"):
        assert f"| {name}" in text
    assert "Failed folds" not in text


def test_summary_lists_failures(gaussian_report):
    report = gaussian_report.model_copy(
        update={"failures": [FoldFailure(fold=2, error="boom", exit_code=2)]}
    )
    text = summary_markdown(report)
    assert "## Failed folds" in text
    assert "boom" in text


def test_oracle_classes_are_disjoint(oracle_report, gaussian_report):
    assert classes_disjoint(oracle_report)
    assert not classes_disjoint(gaussian_report)


def test_bundle_files(tmp_path, oracle_report):
    outputs = write_report_bundle(oracle_report, tmp_path)
    names = sorted(p.name for p in outputs)
    assert names == sorted(
        [ROC_FILENAME, SCORES_FILENAME, FOLDS_FILENAME, SUMMARY_FILENAME]
    )
    roc = (tmp_path / ROC_FILENAME).read_text(encoding="utf-8")
    assert roc.lstrip().startswith("<?xml")
    assert "<svg" in roc
    assert "disjoint" in (tmp_path / SCORES_FILENAME).read_text(encoding="utf-8")


def test_bundle_is_byte_identical(tmp_path, gaussian_report):
    """Test that plots carry no dates or random ids"""
    first = write_report_bundle(gaussian_report, tmp_path / "a")
    second = write_report_bundle(gaussian_report, tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_empty_report_still_plots(tmp_path, gaussian_report):
    empty = gaussian_report.model_copy(update={"fold_reports": []})
    outputs = write_report_bundle(empty, tmp_path)
    assert all(p.stat().st_size > 0 for p in outputs)
