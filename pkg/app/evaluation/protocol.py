"""Repeated leakage-safe risk estimation

One fold: split by object, train a fresh detector on the nominal training
objects, choose the threshold on the threshold partition, then apply it to the
inference partition. K folds with seeds derived from the run seed make a
RiskReport with per-metric means, spreads and bootstrap intervals.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.dataprep.manifest import DatasetManifest
from app.dataprep.split import three_way_split
from app.detectors.base import DetectorFactory
from app.helpers.constants import FOLD_METRICS
from app.helpers.errors import FoldFailedError, ProtocolFailedError
from app.helpers.schemas import (
    FoldFailure,
    FoldReport,
    MetricSummary,
    ProtocolConfig,
    RiskReport,
    ScoreRecord,
)
from app.helpers.strings import count_noun
from app.numerics.rng import derive_seed, seeded_rng

from .bootstrap import bootstrap_ci
from .metrics import classify, confusion_metrics
from .roc import auroc_from_curve, roc_curve, select_threshold

logger = logging.getLogger(__name__)

FoldOutcome = Union[FoldReport, FoldFailedError]

# Key of the bootstrap sub-stream; fold seeds use single-key paths
BOOTSTRAP_STREAM = 0xB007


def _scores_and_labels(records: Sequence[ScoreRecord]) -> Tuple[List[float], List]:
    return [r.score for r in records], [r.label for r in records]


def run_fold(
    manifest: DatasetManifest,
    factory: DetectorFactory,
    cfg: ProtocolConfig,
    seed: int,
    fold: int,
) -> FoldReport:
    """Steps of one repetition; raises FoldFailedError on any failure"""
    fold_seed = derive_seed(seed, fold)
    try:
        split = three_way_split(
            manifest.records, fold_seed, cfg.nominal_train_fraction
        )
        detector = factory(derive_seed(fold_seed, 1))
        detector.fit(split.train)

        threshold_scores, threshold_labels = _scores_and_labels(
            detector.score(split.threshold_part)
        )
        threshold_curve = roc_curve(threshold_scores, threshold_labels)
        rule = select_threshold(
            threshold_curve, cfg.criterion, cfg.cost_fp, cfg.cost_fn
        )

        inference_scores, inference_labels = _scores_and_labels(
            detector.score(split.inference_part)
        )
        predicted = classify(inference_scores, rule.tau)
        inference_curve = roc_curve(inference_scores, inference_labels)
    except Exception as e:
        logger.error(
            "Fold %d failed: %s", fold, e, extra={"fold": fold, "seed": fold_seed}
        )
        raise FoldFailedError(fold, e) from e

    report = FoldReport(
        fold=fold,
        seed=fold_seed,
        tau=rule.tau,
        auroc_threshold_part=auroc_from_curve(threshold_curve),
        auroc_inference=auroc_from_curve(inference_curve),
        metrics=confusion_metrics(predicted, inference_labels),
        train_size=len(split.train),
        threshold_size=len(split.threshold_part),
        inference_size=len(split.inference_part),
        roc_inference=inference_curve.points(),
        inference_scores=inference_scores,
        inference_labels=inference_labels,
    )
    logger.info(
        "Fold %d: AUROC %.4f (threshold part), %.4f (inference)",
        fold,
        report.auroc_threshold_part,
        report.auroc_inference,
        extra={"fold": fold, "seed": fold_seed, "tau": rule.tau},
    )
    return report


def summarize(
    fold_reports: Sequence[FoldReport], cfg: ProtocolConfig, seed: int
) -> List[MetricSummary]:
    """Mean, sample std and percentile-bootstrap CI of every fold metric"""
    rng = seeded_rng(seed).child(BOOTSTRAP_STREAM)
    summary = []
    for index, name in enumerate(FOLD_METRICS):
        values = np.array(
            [v for v in (r.metric(name) for r in fold_reports) if v is not None],
            dtype=np.float64,
        )
        item = MetricSummary(
            name=name, ci_level=cfg.ci_level, defined_folds=int(values.size)
        )
        if values.size:
            item.mean = float(values.mean())
        if values.size >= 2:
            item.std = float(values.std(ddof=1))
            item.ci_lower, item.ci_upper = bootstrap_ci(
                values, cfg.bootstrap_resamples, cfg.ci_level, rng.child(index)
            )
        summary.append(item)
    return summary


def build_report(
    fold_reports: Sequence[FoldReport],
    cfg: ProtocolConfig,
    seed: int,
    model: str,
    dataset: str,
    config: Optional[Dict] = None,
    failures: Sequence[FoldFailure] = (),
) -> RiskReport:
    ordered = sorted(fold_reports, key=lambda r: r.fold)
    if config is None:
        config = {"protocol": cfg.model_dump(mode="json")}
    return RiskReport(
        model=model,
        dataset=dataset,
        folds=cfg.folds,
        seed=seed,
        criterion=cfg.criterion,
        config=config,
        fold_reports=ordered,
        summary=summarize(ordered, cfg, seed),
        failures=sorted(failures, key=lambda f: f.fold),
    )


def _attempt(
    manifest: DatasetManifest,
    factory: DetectorFactory,
    cfg: ProtocolConfig,
    seed: int,
    fold: int,
) -> FoldOutcome:
    try:
        return run_fold(manifest, factory, cfg, seed, fold)
    except FoldFailedError as e:
        return e


def run_protocol(
    manifest: DatasetManifest,
    factory: DetectorFactory,
    cfg: ProtocolConfig,
    seed: int,
    jobs: int = 1,
    model: str = "detector",
    dataset: Optional[str] = None,
    config: Optional[Dict] = None,
) -> RiskReport:
    """Run all K folds and aggregate them

    Folds are independent and may run on ``jobs`` threads; the report is keyed
    and ordered by fold index, so it does not depend on ``jobs``.

    Raises:
        ProtocolFailedError: At least one fold failed; ``partial_report``
            holds the completed folds and one failure record per failed fold
    """
    dataset_name = dataset if dataset is not None else (manifest.root.name or "dataset")
    logger.info(
        "Running %s on %s",
        count_noun(cfg.folds, "fold"),
        dataset_name,
        extra={"seed": seed, "jobs": jobs, "criterion": cfg.criterion.value},
    )

    folds = range(cfg.folds)
    if jobs > 1 and cfg.folds > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(
                pool.map(lambda k: _attempt(manifest, factory, cfg, seed, k), folds)
            )
    else:
        outcomes = [_attempt(manifest, factory, cfg, seed, k) for k in folds]

    reports = [o for o in outcomes if isinstance(o, FoldReport)]
    failures = [
        FoldFailure(fold=o.fold, error=str(o.cause), exit_code=o.exit_code)
        for o in outcomes
        if isinstance(o, FoldFailedError)
    ]
    report = build_report(reports, cfg, seed, model, dataset_name, config, failures)

    if failures:
        first = failures[0]
        raise ProtocolFailedError(
            f"{count_noun(len(failures), 'fold')} failed (first: fold {first.fold}: "
            f"{first.error})",
            partial_report=report,
        )
    return report

