"""Tests for manifest parsing, writing and sample loading"""

import json

import numpy as np
import pytest

from app.dataprep.manifest import (
    DatasetManifest,
    LoadedSample,
    dump_manifest,
    filter_manifest,
    load_manifest,
    load_samples,
    write_manifest,
    write_samples,
)
from app.helpers.errors import ManifestError
from app.helpers.imageio import write_image
from app.helpers.schemas import CanvasSpec, Label, ManifestHeader, SampleRecord


def line(sid: str, label: str = "nominal", **extra) -> str:
    record = {"sample_id": sid, "object_id": sid, "label": label, "image": f"{sid}.png"}
    return json.dumps({**record, **extra})


@pytest.fixture
def dataset_dir(tmp_path):
    for sid in ("a", "b"):
        write_image(tmp_path / f"{sid}.png", np.full((4, 4), 7, dtype=np.uint8))
    return tmp_path


def write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_load_manifest(dataset_dir):
    """Test records, header and root of a valid manifest"""
    header = json.dumps({"_header": {"canvas": {"width": 3, "height": 2}}})
    path = write_lines(
        dataset_dir / "manifest.jsonl", header, line("a"), "", line("b", "anomalous")
    )
    manifest = load_manifest(path)
    assert [r.sample_id for r in manifest] == ["a", "b"]
    assert manifest.root == dataset_dir
    assert manifest.header.canvas == CanvasSpec(width=3, height=2)
    assert [r.sample_id for r in manifest.nominal] == ["a"]
    assert [r.sample_id for r in manifest.anomalous] == ["b"]
    assert manifest.files() == [dataset_dir / "a.png", dataset_dir / "b.png"]


@pytest.mark.parametrize(
    "lines, message",
    [
        (["{not json"], "line 1: malformed JSON"),
        (["[1, 2]"], "line 1: expected a JSON object"),
        ([line("a"), line("a")], "line 2: duplicate sample_id 'a'"),
        ([line("a"), json.dumps({"_header": {}})], "line 2: header must be the first"),
        ([json.dumps({"sample_id": "a"})], "line 1: invalid record"),
        ([line("a", label="weird")], "line 1: invalid record"),
        ([line("a", colour="red")], "line 1: invalid record"),
        ([line("../a")], "line 1: invalid record"),
    ],
)
def test_malformed_manifests(tmp_path, lines, message):
    path = write_lines(tmp_path / "m.jsonl", *lines)
    with pytest.raises(ManifestError, match=message):
        load_manifest(path, check_files=False)


def test_error_carries_line_number(tmp_path):
    path = write_lines(tmp_path / "m.jsonl", line("a"), "", "oops")
    with pytest.raises(ManifestError) as excinfo:
        load_manifest(path, check_files=False)
    assert excinfo.value.line == 3


def test_missing_files_reported(dataset_dir):
    path = write_lines(dataset_dir / "m.jsonl", line("a"), line("c"))
    with pytest.raises(ManifestError, match="sample c: image file c.png"):
        load_manifest(path)
    assert len(load_manifest(path, check_files=False)) == 2


def test_missing_mask_reported(dataset_dir):
    path = write_lines(dataset_dir / "m.jsonl", line("a", mask="masks/a.png"))
    with pytest.raises(ManifestError, match="mask file masks/a.png"):
        load_manifest(path)


def test_unreadable_manifest(tmp_path):
    with pytest.raises(ManifestError, match="Cannot read manifest"):
        load_manifest(tmp_path / "absent.jsonl")


def test_duplicate_ids_rejected_in_memory():
    record = SampleRecord(sample_id="a", object_id="o", label=Label.NOMINAL, image="a")
    with pytest.raises(ManifestError, match="duplicate"):
        DatasetManifest([record, record])


def test_object_ids_in_first_appearance_order():
    records = [
        SampleRecord(sample_id=f"s{i}", object_id=oid, label=Label.NOMINAL, image="x")
        for i, oid in enumerate(["z", "a", "z", "m"])
    ]
    assert DatasetManifest(records).object_ids() == ["z", "a", "m"]


def test_write_then_load_preserves_records(tmp_path):
    header = ManifestHeader(canvas=CanvasSpec(width=5, height=6), config_hash="f00")
    records = [
        SampleRecord(
            sample_id="a",
            object_id="o1",
            label=Label.ANOMALOUS,
            image="a.png",
            mask="m.png",
        ),
        SampleRecord(
            sample_id="b", object_id="o1", label=Label.NOMINAL, image="b.png"
        ),
    ]
    manifest = DatasetManifest(records, tmp_path, header)
    path = write_manifest(manifest, tmp_path / "m.jsonl")
    loaded = load_manifest(path, check_files=False)
    assert loaded.records == records
    assert loaded.header == header


def test_dump_omits_absent_fields():
    record = SampleRecord(
        sample_id="a", object_id="o", label=Label.NOMINAL, image="a.png"
    )
    text = dump_manifest(DatasetManifest([record]))
    assert text == (
        '{"image": "a.png", "label": "nominal", "object_id": "o", "sample_id": "a"}\n'
    )


def test_filter_keeps_root_and_header(tmp_path):
    header = ManifestHeader(config_hash="abc")
    records = [
        SampleRecord(sample_id=f"s{i}", object_id="o", label=Label.NOMINAL, image="x")
        for i in range(4)
    ]
    manifest = DatasetManifest(records, tmp_path, header)
    kept = filter_manifest(manifest, lambda r: r.sample_id > "s1")
    assert [r.sample_id for r in kept] == ["s2", "s3"]
    assert kept.root == tmp_path
    assert kept.header is header


def test_write_and_load_samples(tmp_path):
    image = np.arange(16, dtype=np.uint8).reshape(4, 4)
    mask = image > 5
    record = SampleRecord(
        sample_id="a", object_id="o", label=Label.ANOMALOUS, image="?"
    )
    manifest = write_samples([LoadedSample(record, image, mask, mask)], tmp_path)

    assert manifest.records[0].image == "images/a.png"
    assert manifest.records[0].mask == "masks/a.png"
    assert manifest.records[0].defect_mask == "defects/a.png"
    assert (tmp_path / "manifest.jsonl").is_file()

    (sample,) = load_samples(load_manifest(tmp_path / "manifest.jsonl"))
    np.testing.assert_array_equal(sample.image, image)
    np.testing.assert_array_equal(sample.mask, mask)
    np.testing.assert_array_equal(sample.defect_mask, mask)


def test_with_arrays_updates_record():
    record = SampleRecord(sample_id="a", object_id="o", label=Label.NOMINAL, image="a")
    sample = LoadedSample(record, np.zeros((2, 2), dtype=np.uint8))
    ones = np.ones((2, 2), dtype=np.uint8)
    moved = sample.with_arrays(ones, None, None, sample_id="b")
    assert moved.record.sample_id == "b"
    assert moved.record.object_id == "o"
    assert sample.record.sample_id == "a"
