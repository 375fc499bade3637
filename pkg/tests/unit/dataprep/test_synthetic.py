"""Tests for the procedural datasets"""

import numpy as np
import pytest

from app.dataprep.manifest import load_manifest
from app.dataprep.synthetic import (
    DEFECT_VALUE,
    PLACEHOLDER_IMAGE,
    add_defect,
    draw_shape,
    object_manifest,
    position_samples,
    score_manifest,
    shape_samples,
    write_score_dataset,
)
from app.numerics import seeded_rng


def test_score_manifest_counts():
    manifest = score_manifest(5, 3)
    assert len(manifest.nominal) == 5
    assert len(manifest.anomalous) == 3
    assert len(manifest.object_ids()) == 8
    assert {r.image for r in manifest} == {PLACEHOLDER_IMAGE}


def test_write_score_dataset_loads_with_file_checks(tmp_path):
    path = write_score_dataset(tmp_path, 4, 2)
    manifest = load_manifest(path)
    assert len(manifest) == 6
    assert (tmp_path / PLACEHOLDER_IMAGE).is_file()


def test_object_manifest_without_rng_marks_whole_objects():
    manifest = object_manifest(5, 3, anomalous_objects=2)
    assert len(manifest) == 15
    assert len(manifest.anomalous) == 6
    assert {r.object_id for r in manifest.anomalous} == {"o0000", "o0001"}


def test_object_manifest_mixes_labels_within_anomalous_objects():
    manifest = object_manifest(4, 12, anomalous_objects=4, rng=seeded_rng(0))
    for oid in manifest.object_ids():
        labels = {r.is_anomalous for r in manifest if r.object_id == oid}
        assert True in labels
    assert manifest.nominal


def test_shape_is_not_rotation_symmetric():
    image, mask = draw_shape(32, (16, 16), 16)
    assert mask.any()
    for k in (1, 2, 3):
        assert not np.array_equal(np.rot90(mask, k), mask)


def test_shape_stays_on_foreground():
    image, mask = draw_shape(32, (16, 16), 12)
    assert np.all(image[~mask] == 0)
    assert np.all(image[mask] > 0)


def test_defect_lies_inside_the_object():
    image, mask = draw_shape(32, (16, 16), 16)
    out, defect = add_defect(image, mask, seeded_rng(3))
    assert defect.any()
    assert not np.any(defect & ~mask)
    assert np.all(out[defect] == DEFECT_VALUE)
    np.testing.assert_array_equal(out[~defect], image[~defect])


def test_shape_samples_labels_and_masks():
    samples = shape_samples(3, 2, seed=1)
    assert [s.record.is_anomalous for s in samples] == [False] * 3 + [True] * 2
    assert all(s.defect_mask is None for s in samples[:3])
    assert all(s.defect_mask.any() for s in samples[3:])
    assert all(s.image.shape == (32, 32) for s in samples)


@pytest.mark.parametrize("angle, k", [(90, 1), (180, 2), (270, 3)])
def test_rotated_shape_samples(angle, k):
    upright = shape_samples(1, 1, seed=4)
    turned = shape_samples(1, 1, seed=4, angle=angle)
    for a, b in zip(upright, turned):
        np.testing.assert_array_equal(b.image, np.rot90(a.image, k))
        np.testing.assert_array_equal(b.mask, np.rot90(a.mask, k))
    np.testing.assert_array_equal(
        turned[1].defect_mask, np.rot90(upright[1].defect_mask, k)
    )


def test_shape_samples_are_seeded():
    a = shape_samples(0, 3, seed=9)
    b = shape_samples(0, 3, seed=9)
    assert all(np.array_equal(x.image, y.image) for x, y in zip(a, b))


def test_position_samples_alternate():
    samples = position_samples(4)
    left, right = samples[0].mask, samples[1].mask
    assert not np.array_equal(left, right)
    np.testing.assert_array_equal(samples[2].mask, left)
    np.testing.assert_array_equal(samples[3].mask, right)
    fixed = position_samples(3, two_positions=False)
    assert all(np.array_equal(s.mask, left) for s in fixed)
    assert all(not s.record.is_anomalous for s in samples)
