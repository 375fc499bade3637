"""Tests for atomic writes, hashes and CSV outputs"""

import json

import pytest

from app.helpers.errors import InputValidationError
from app.helpers.schemas import EpochRecord, Label, ScoreRecord
from app.helpers.storage import (
    atomic_write_bytes,
    atomic_write_text,
    content_hash,
    file_sha256,
    read_score_csv,
    write_experiment_record,
    write_history_csv,
    write_score_csv,
)


def test_atomic_write_creates_parents(tmp_path):
    target = tmp_path / "a" / "b" / "out.bin"
    assert atomic_write_bytes(target, b"\x00\x01") == target
    assert target.read_bytes() == b"\x00\x01"
    assert [p.name for p in target.parent.iterdir()] == ["out.bin"]


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text(encoding="utf-8") == "second"


def test_content_hash_ignores_order_and_missing_files(tmp_path):
    a = atomic_write_text(tmp_path / "a.txt", "alpha")
    b = atomic_write_text(tmp_path / "b.txt", "beta")
    assert content_hash([a, b]) == content_hash([b, a])
    assert content_hash([a, b]) == content_hash([a, b, tmp_path / "missing"])
    atomic_write_text(b, "changed")
    assert content_hash([a]) != content_hash([a, b])


def test_file_sha256(tmp_path):
    path = atomic_write_bytes(tmp_path / "empty", b"")
    expected = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert file_sha256(path) == expected


def test_score_csv_round_trip(tmp_path):
    records = [
        ScoreRecord(sample_id="a", label=Label.NOMINAL, score=0.1 + 0.2),
        ScoreRecord(sample_id="b", label=Label.ANOMALOUS, score=-1e-300),
        ScoreRecord(sample_id="c", label=None, score=12.5),
    ]
    path = write_score_csv(tmp_path / "scores.csv", records)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "sample_id,label,score"
    loaded = read_score_csv(path)
    assert [r.model_dump() for r in loaded] == [r.model_dump() for r in records]


@pytest.mark.parametrize(
    "content",
    [
        "",
        "id,label,score\n",
        "sample_id,label,score\na,nominal\n",
        "sample_id,label,score\na,bogus,0.5\n",
        "sample_id,label,score\na,nominal,nan\n",
        "sample_id,label,score\na,nominal,high\n",
    ],
)
def test_read_score_csv_rejects(tmp_path, content):
    path = tmp_path / "scores.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(InputValidationError):
        read_score_csv(path)


def test_history_csv(tmp_path):
    history = [
        EpochRecord(epoch=1, loss=2.5),
        EpochRecord(epoch=2, loss=1.25, metrics={"auroc": 0.75}),
    ]
    path = write_history_csv(tmp_path / "model.history.csv", history)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "epoch,loss,auroc",
        "1,2.5,",
        "2,1.25,0.75",
    ]


def test_experiment_record(tmp_path):
    source = atomic_write_text(tmp_path / "manifest.jsonl", "{}\n")
    artifact = atomic_write_text(tmp_path / "report.json", "{}")
    path = write_experiment_record(
        artifact, "protocol", {"seed": 3}, "abc", [source], [artifact]
    )
    assert path.name == "report.json.record.json"
    record = json.loads(path.read_text(encoding="utf-8"))
    assert record["command"] == "protocol"
    assert record["config"] == {"seed": 3}
    assert record["config_hash"] == "abc"
    assert record["input_hash"] == content_hash([source])
    assert record["outputs"] == [str(artifact)]
    assert record["timestamp"].endswith("+00:00")
