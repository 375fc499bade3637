"""File helpers: atomic writes, content hashes, score CSVs, experiment records"""

import csv
import hashlib
import io
import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from .constants import RECORD_SUFFIX, SCORE_CSV_HEADER
from .errors import InputValidationError
from .schemas import EpochRecord, ExperimentRecord, Label, ScoreRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write through a temp file in the target directory, then rename"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %s (%d bytes)", target, len(data), extra={"path": str(target)})
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def content_hash(paths: Iterable[PathLike]) -> str:
    """Order-independent hash over (name, content) of every input file"""
    entries = sorted(
        f"{Path(p).name}:{file_sha256(p)}" for p in paths if Path(p).is_file()
    )
    return hashlib.sha256("\n".join(entries).encode("utf-8")).hexdigest()


def write_experiment_record(
    artifact: PathLike,
    command: str,
    config: Dict[str, Any],
    config_hash: str,
    inputs: Sequence[PathLike],
    outputs: Sequence[PathLike],
) -> Path:
    """Write ``<artifact>.record.json`` next to a command output"""
    record = ExperimentRecord(
        command=command,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        config_hash=config_hash,
        input_hash=content_hash(inputs),
        outputs=[str(p) for p in outputs],
        config=config,
    )
    path = Path(str(artifact) + RECORD_SUFFIX)
    return atomic_write_text(path, record.model_dump_json(indent=2) + "\n")


def write_score_csv(path: PathLike, records: Sequence[ScoreRecord]) -> Path:
    """CSV with header sample_id,label,score; scores keep full precision"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SCORE_CSV_HEADER)
    for record in records:
        label = record.label.value if record.label is not None else ""
        writer.writerow([record.sample_id, label, repr(float(record.score))])
    return atomic_write_text(path, buffer.getvalue())


def read_score_csv(path: PathLike) -> List[ScoreRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != SCORE_CSV_HEADER:
            raise InputValidationError(
                f"{path}: expected header {','.join(SCORE_CSV_HEADER)}"
            )
        records = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(SCORE_CSV_HEADER):
                raise InputValidationError(f"{path}:{line_no}: expected 3 columns")
            sample_id, label, score = row
            try:
                records.append(
                    ScoreRecord(
                        sample_id=sample_id,
                        label=Label(label) if label else None,
                        score=float(score),
                    )
                )
            except ValueError as e:
                raise InputValidationError(f"{path}:{line_no}: {e}") from e
    return records


def write_history_csv(path: PathLike, history: Sequence[EpochRecord]) -> Path:
    """One row per epoch: epoch, loss and any evaluation metrics"""
    metric_names = sorted({name for r in history if r.metrics for name in r.metrics})
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["epoch", "loss", *metric_names])
    for record in history:
        metrics = record.metrics or {}
        writer.writerow(
            [
                record.epoch,
                repr(float(record.loss)),
                *(
                    repr(float(metrics[n])) if n in metrics else ""
                    for n in metric_names
                ),
            ]
        )
    return atomic_write_text(path, buffer.getvalue())
