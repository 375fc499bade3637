"""Tests for the object-level three-way split"""

import pytest

from app.dataprep.split import nominal_test_objects, three_way_split
from app.dataprep.synthetic import object_manifest, score_manifest
from app.helpers.errors import SplitError
from app.numerics import seeded_rng

PARTS = ("train", "threshold_part", "inference_part")


def test_partitions_cover_score_dataset():
    records = score_manifest(20, 6).records
    split = three_way_split(records, seed=0)
    assert sum(1 for r in split.threshold_part if r.is_anomalous) == 3
    assert sum(1 for r in split.inference_part if r.is_anomalous) == 3
    assert sum(1 for r in split.threshold_part if not r.is_anomalous) == 3
    assert sum(1 for r in split.inference_part if not r.is_anomalous) == 3
    assert len(split.train) == 14
    assert all(not r.is_anomalous for r in split.train)
    assert split.excluded == []


def test_odd_anomalous_count_favors_threshold_part():
    split = three_way_split(score_manifest(20, 5).records, seed=1)
    assert sum(r.is_anomalous for r in split.threshold_part) == 3
    assert sum(r.is_anomalous for r in split.inference_part) == 2


@pytest.mark.slow
def test_objects_never_leak_between_partitions():
    """Test that no object id appears in two partitions over many seeds"""
    manifest = object_manifest(12, 120, anomalous_objects=5, rng=seeded_rng(0))
    for seed in range(1000):
        split = three_way_split(manifest.records, seed=seed)
        for i, a in enumerate(PARTS):
            for b in PARTS[i + 1 :]:
                assert not split.object_ids(a) & split.object_ids(b)
        halves = [
            len({r.object_id for r in split.threshold_part if r.is_anomalous}),
            len({r.object_id for r in split.inference_part if r.is_anomalous}),
        ]
        assert sorted(halves) == [2, 3]


@pytest.mark.parametrize("seed", range(10))
def test_every_record_is_placed_once(seed):
    manifest = object_manifest(25, 3, anomalous_objects=6, rng=seeded_rng(seed))
    split = three_way_split(manifest.records, seed=seed)
    placed = [
        r.sample_id
        for part in (*PARTS, "excluded")
        for r in getattr(split, part)
    ]
    assert sorted(placed) == sorted(r.sample_id for r in manifest.records)


def test_nominal_images_of_anomalous_objects_are_excluded():
    manifest = object_manifest(10, 10, anomalous_objects=4, rng=seeded_rng(2))
    split = three_way_split(manifest.records, seed=0)
    anomalous_objects = {r.object_id for r in manifest.records if r.is_anomalous}
    assert split.excluded
    assert all(not r.is_anomalous for r in split.excluded)
    assert {r.object_id for r in split.excluded} <= anomalous_objects
    assert not split.object_ids("train") & anomalous_objects


def test_split_is_reproducible():
    records = score_manifest(40, 10).records
    a = three_way_split(records, seed=7)
    b = three_way_split(records, seed=7)
    c = three_way_split(records, seed=8)
    assert a == b
    assert a.inference_part != c.inference_part


def test_split_ignores_record_order():
    records = score_manifest(30, 8).records
    a = three_way_split(records, seed=3)
    b = three_way_split(list(reversed(records)), seed=3)
    for part in PARTS:
        assert a.object_ids(part) == b.object_ids(part)


@pytest.mark.parametrize(
    "n_nominal, n_anomalous, message",
    [
        (20, 1, "at least 2 anomalous objects"),
        (20, 0, "at least 2 anomalous objects"),
        (2, 4, "cannot fill two test partitions"),
    ],
)
def test_split_errors(n_nominal, n_anomalous, message):
    with pytest.raises(SplitError, match=message):
        three_way_split(score_manifest(n_nominal, n_anomalous).records, seed=0)


@pytest.mark.parametrize(
    "n_nominal, half, fraction, expected",
    [
        (20, 3, None, 3),
        (5, 3, None, 2),
        (3, 10, None, 1),
        (100, 3, 0.6, 20),
        (100, 3, 0.5, 25),
    ],
)
def test_nominal_test_objects(n_nominal, half, fraction, expected):
    assert nominal_test_objects(n_nominal, half, fraction) == expected


def test_train_fraction_shrinks_training_set():
    records = score_manifest(100, 6).records
    split = three_way_split(records, seed=0, nominal_train_fraction=0.6)
    assert len(split.train) == 60
