"""Controlled experiments on procedural shapes (small models, several seconds)"""

import math

import pytest

from app.core.config import RunConfig
from app.evaluation.experiments import (
    RotationResult,
    SilhouetteResult,
    rotation_experiment,
    silhouette_experiment,
)


@pytest.fixture(scope="module")
def experiment_config():
    return RunConfig.model_validate(
        {
            "extractor": {"num_filters": 6},
            "flow": {"num_blocks": 2, "hidden_units": 16},
            "train": {"epochs": 30, "batch_size": 8, "learning_rate": 3e-3},
            "discriminator": {"epochs": 10},
        }
    )


def test_rotation_result_properties():
    result = RotationResult(
        auroc_without=0.6,
        auroc_with=0.9,
        rotated_nominal_without=5.0,
        rotated_nominal_with=2.5,
        upright_nominal_without=2.0,
        upright_nominal_with=2.0,
    )
    assert result.auroc_gain == pytest.approx(0.3)
    assert result.rotated_excess_without == 3.0
    assert result.rotated_gap == pytest.approx(2.5)


@pytest.mark.parametrize(
    "flow,disc,expected",
    [(0.4, 0.1, 4.0), (0.4, 0.0, math.inf), (0.0, 0.0, 1.0)],
)
def test_silhouette_ratio(flow, disc, expected):
    assert SilhouetteResult(flow, disc).ratio == pytest.approx(expected)


def test_position_score_gap():
    result = SilhouetteResult(
        0.4, 0.0, two_position_score=1.5, fixed_position_score=-0.5
    )
    assert result.position_score_gap == 2.0


@pytest.mark.slow
def test_rotation_training_closes_the_rotated_gap(experiment_config):
    result = rotation_experiment(experiment_config)
    assert result.rotated_nominal_without > result.rotated_nominal_with
    assert result.rotated_gap > 0
    assert result.auroc_gain >= 0.1


@pytest.fixture(scope="module")
def silhouette(experiment_config):
    return silhouette_experiment(experiment_config)


@pytest.mark.slow
def test_discriminator_ignores_blacked_out_background(silhouette):
    assert silhouette.discriminator_fraction == 0.0
    assert all(f == 0.0 for f in silhouette.per_sample_discriminator)
    assert silhouette.flow_fraction > 0.0
    assert silhouette.ratio >= 2.0


@pytest.mark.slow
def test_two_position_flow_scores_fixed_objects_higher(silhouette):
    """Test that averaging over two positions raises the score at both"""
    assert silhouette.two_position_score > silhouette.fixed_position_score
    assert silhouette.position_score_gap > 0.0
