"""Tests for the reference detectors and detector construction"""

import numpy as np
import pytest
from scipy.stats import norm

from app.core.config import RunConfig
from app.detectors.base import DetectorKind, detector_factory, make_detector
from app.detectors.feature_store import FeatureStore
from app.detectors.learned import DiscriminatorDetector, FlowDetector
from app.detectors.reference import GaussianDetector, OracleDetector, RandomDetector
from app.evaluation.roc import auroc
from app.helpers.errors import InputValidationError
from app.helpers.schemas import Label, SampleRecord


def records(n_nominal: int, n_anomalous: int):
    return [
        SampleRecord(
            sample_id=f"r{i:04d}",
            object_id=f"r{i:04d}",
            label=Label.ANOMALOUS if i >= n_nominal else Label.NOMINAL,
            image=f"r{i:04d}.png",
        )
        for i in range(n_nominal + n_anomalous)
    ]


def test_oracle_scores_follow_labels():
    scores = OracleDetector().score(records(3, 2))
    assert [s.score for s in scores] == [0.0, 0.0, 0.0, 1.0, 1.0]
    assert [s.label for s in scores] == [Label.NOMINAL] * 3 + [Label.ANOMALOUS] * 2


def test_random_scores_are_uniform_and_seeded():
    data = records(50, 50)
    a = [s.score for s in RandomDetector(4).score(data)]
    b = [s.score for s in RandomDetector(4).score(data)]
    assert a == b
    assert all(0.0 <= v < 1.0 for v in a)
    assert a != [s.score for s in RandomDetector(5).score(data)]


def test_gaussian_detector_auroc_near_population_value():
    data = records(2000, 2000)
    scores = GaussianDetector(0).score(data)
    labels = np.array([s.label == Label.ANOMALOUS for s in scores])
    values = np.array([s.score for s in scores])
    expected = norm.cdf(2.0 / np.sqrt(2.0))
    assert auroc(values, labels) == pytest.approx(expected, abs=0.02)


def test_gaussian_separation():
    data = records(1000, 1000)
    detector = GaussianDetector(1, separation=5.0)
    scores = np.array([s.score for s in detector.score(data)])
    assert scores[:1000].mean() == pytest.approx(0.0, abs=0.1)
    assert scores[1000:].mean() == pytest.approx(5.0, abs=0.1)


@pytest.mark.parametrize(
    "kind, trainable",
    [
        (DetectorKind.FLOW, True),
        (DetectorKind.DISCRIMINATOR, True),
        (DetectorKind.ORACLE, False),
        (DetectorKind.RANDOM, False),
        (DetectorKind.GAUSSIAN, False),
    ],
)
def test_trainable_kinds(kind, trainable):
    assert kind.trainable is trainable


@pytest.mark.parametrize(
    "kind, cls",
    [
        ("oracle", OracleDetector),
        ("random", RandomDetector),
        ("gaussian", GaussianDetector),
    ],
)
def test_make_reference_detector(kind, cls):
    assert isinstance(make_detector(kind, seed=3), cls)


@pytest.mark.parametrize("kind", [DetectorKind.FLOW, DetectorKind.DISCRIMINATOR])
def test_trainable_detector_needs_config_and_store(kind):
    with pytest.raises(InputValidationError, match="needs a config"):
        make_detector(kind, seed=0)


def test_factory_builds_fresh_seeded_detectors(tmp_path):
    build = detector_factory(DetectorKind.FLOW, RunConfig(), FeatureStore(tmp_path))
    first, second = build(1), build(2)
    assert isinstance(first, FlowDetector)
    assert first is not second
    assert (first.seed, second.seed) == (1, 2)

    build = detector_factory(DetectorKind.DISCRIMINATOR, RunConfig(), FeatureStore())
    disc = build(7)
    assert isinstance(disc, DiscriminatorDetector)


def test_factory_reference_detectors_repeat_per_seed():
    build = detector_factory(DetectorKind.GAUSSIAN)
    data = records(10, 10)
    assert [s.score for s in build(3).score(data)] == [
        s.score for s in build(3).score(data)
    ]


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_detector("forest", seed=0)
