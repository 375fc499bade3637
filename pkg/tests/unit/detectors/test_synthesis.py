"""Tests for local anomaly synthesis"""

import numpy as np
import pytest

from app.detectors.synthesis import blob_mask, make_texture, synth_local, value_noise
from app.helpers.errors import ShapeError, SynthesisError
from app.helpers.imageio import write_image
from app.helpers.schemas import SynthLocalConfig, TextureSource
from app.numerics import seeded_rng


@pytest.fixture
def disk_mask() -> np.ndarray:
    rows, cols = np.mgrid[0:16, 0:16]
    return (rows - 8) ** 2 + (cols - 7) ** 2 <= 25


@pytest.fixture
def sample() -> np.ndarray:
    return np.asarray(seeded_rng(0).draw_uniform((16, 16), 0.0, 255.0))


def test_tiny_opacity_leaves_sample_nearly_unchanged(sample, disk_mask):
    cfg = SynthLocalConfig(opacity=1e-6)
    out, mask = synth_local(sample, disk_mask, cfg, seeded_rng(1))
    np.testing.assert_allclose(out, sample, atol=1e-3)
    assert mask.any()


def test_covering_blob_blends_every_pixel(sample):
    cfg = SynthLocalConfig(opacity=0.5, min_blob_size=100)
    texture = np.where(sample > 127, 0.0, 255.0)
    fg = np.ones((16, 16), bool)
    out, mask = synth_local(sample, fg, cfg, seeded_rng(2), texture)
    assert mask.all()
    np.testing.assert_allclose(out, 0.5 * sample + 0.5 * texture)


def test_explicit_texture_is_blended_as_given():
    """Test that a texture matching the sample leaves those pixels untouched"""
    image = np.full((8, 8), 100.0)
    texture = image.copy()
    texture[0, 0] = 200.0
    cfg = SynthLocalConfig(opacity=0.5, min_blob_size=100)
    out, mask = synth_local(image, np.ones((8, 8), bool), cfg, seeded_rng(0), texture)
    np.testing.assert_array_equal(out, 0.5 * image + 0.5 * texture)
    assert out[0, 0] == 150.0
    assert mask.sum() == 1 and mask[0, 0]


def test_mask_is_exactly_the_changed_set(disk_mask):
    """Test the altered positions against the returned mask over many cases"""
    for seed in range(1000):
        rng = seeded_rng(seed)
        sample = np.asarray(rng.child(0).draw_uniform((16, 16), 0.0, 255.0))
        cfg = SynthLocalConfig(opacity=float(rng.child(1).draw_uniform(None, 0.1, 1.0)))
        out, mask = synth_local(sample, disk_mask, cfg, rng.child(2))
        np.testing.assert_array_equal(out != sample, mask)
        assert not np.any(mask & ~disk_mask)


def test_feature_grids_change_as_whole_vectors(disk_mask):
    grid = np.asarray(seeded_rng(3).draw_normal((16, 16, 4)))
    out, mask = synth_local(grid, disk_mask, SynthLocalConfig(), seeded_rng(4))
    np.testing.assert_array_equal(np.any(out != grid, axis=-1), mask)
    np.testing.assert_array_equal(out[~mask], grid[~mask])


def test_empty_foreground_is_rejected(sample):
    with pytest.raises(SynthesisError):
        synth_local(sample, np.zeros((16, 16), bool), SynthLocalConfig(), seeded_rng(0))


def test_mask_size_mismatch(sample):
    with pytest.raises(ShapeError):
        synth_local(sample, np.ones((8, 8), bool), SynthLocalConfig(), seeded_rng(0))


def test_synthesis_is_deterministic(sample, disk_mask):
    first = synth_local(sample, disk_mask, SynthLocalConfig(), seeded_rng(5))
    second = synth_local(sample, disk_mask, SynthLocalConfig(), seeded_rng(5))
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])


def test_blob_mask_stays_in_foreground(disk_mask):
    cfg = SynthLocalConfig(blob_count=(2, 3), blob_area=(0.05, 0.1))
    for seed in range(5):
        blobs = blob_mask(disk_mask, cfg, seeded_rng(seed))
        assert blobs.any()
        assert not np.any(blobs & ~disk_mask)


def test_value_noise_range_and_determinism():
    a = value_noise((20, 12), 4, seeded_rng(6))
    assert a.shape == (20, 12)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_array_equal(a, value_noise((20, 12), 4, seeded_rng(6)))


def test_texture_follows_configured_range(sample):
    cfg = SynthLocalConfig(texture_range=(10.0, 20.0))
    texture = make_texture(sample, cfg, seeded_rng(7))
    assert texture.shape == sample.shape
    assert texture.min() >= 10.0 and texture.max() <= 20.0


def test_directory_textures(tmp_path, sample, disk_mask):
    write_image(tmp_path / "stripes.png", np.tile([0, 255], (8, 4)).astype(np.uint8))
    cfg = SynthLocalConfig(
        texture_source=TextureSource.DIRECTORY, texture_dir=str(tmp_path)
    )
    out, mask = synth_local(sample, disk_mask, cfg, seeded_rng(8))
    assert mask.any()
    np.testing.assert_array_equal(out[~mask], sample[~mask])


def test_missing_texture_directory(tmp_path, sample, disk_mask):
    cfg = SynthLocalConfig(
        texture_source=TextureSource.DIRECTORY, texture_dir=str(tmp_path / "none")
    )
    with pytest.raises(SynthesisError):
        synth_local(sample, disk_mask, cfg, seeded_rng(0))


def test_directory_source_requires_a_directory():
    with pytest.raises(ValueError):
        SynthLocalConfig(texture_source=TextureSource.DIRECTORY)
