"""Line-delimited JSON dataset manifests and in-memory sample sets

A manifest line is one SampleRecord. An optional first line of the form
``{"_header": {...}}`` carries the canvas and the configuration that produced
the dataset.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.helpers.constants import MANIFEST_FILENAME, MANIFEST_HEADER_KEY
from app.helpers.errors import ManifestError
from app.helpers.imageio import read_image, read_mask, write_image
from app.helpers.schemas import ManifestHeader, SampleRecord
from app.helpers.storage import atomic_write_text

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class DatasetManifest:
    """Records with unique sample ids; paths are relative to ``root``"""

    records: List[SampleRecord] = field(default_factory=list)
    root: Path = field(default_factory=Path)
    header: Optional[ManifestHeader] = None

    def __post_init__(self) -> None:
        seen: Dict[str, int] = {}
        for index, record in enumerate(self.records):
            if record.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {record.sample_id!r}")
            seen[record.sample_id] = index

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SampleRecord]:
        return iter(self.records)

    @property
    def nominal(self) -> List[SampleRecord]:
        return [r for r in self.records if not r.is_anomalous]

    @property
    def anomalous(self) -> List[SampleRecord]:
        return [r for r in self.records if r.is_anomalous]

    def object_ids(self) -> List[str]:
        """Object ids in order of first appearance"""
        return list(dict.fromkeys(r.object_id for r in self.records))

    def resolve(self, relative: str) -> Path:
        return self.root / relative

    def files(self) -> List[Path]:
        """Every image and mask the records reference"""
        return [
            self.resolve(relative)
            for record in self.records
            for relative in (record.image, record.mask, record.defect_mask)
            if relative is not None
        ]


def _parse_line(line: str, line_no: int) -> Dict:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise ManifestError(f"malformed JSON: {e.msg}", line=line_no) from e
    if not isinstance(data, dict):
        raise ManifestError("expected a JSON object", line=line_no)
    return data


def load_manifest(
    path: PathLike, root: Optional[PathLike] = None, check_files: bool = True
) -> DatasetManifest:
    """Read and validate a manifest file

    Args:
        path: The JSONL file
        root: Directory the record paths are relative to (default: its folder)
        check_files: Require every referenced image and mask to exist

    Raises:
        ManifestError: Malformed lines (with line number), duplicate ids,
            missing files
    """
    manifest_path = Path(path)
    base = Path(root) if root is not None else manifest_path.parent
    try:
        lines = manifest_path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ManifestError(f"Cannot read manifest {manifest_path}: {e}") from e

    header: Optional[ManifestHeader] = None
    records: List[SampleRecord] = []
    seen: Dict[str, int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        data = _parse_line(line, line_no)
        if MANIFEST_HEADER_KEY in data:
            if records or header is not None:
                raise ManifestError("header must be the first line", line=line_no)
            try:
                header = ManifestHeader.model_validate(data[MANIFEST_HEADER_KEY])
            except ValidationError as e:
                raise ManifestError(f"invalid header: {e}", line=line_no) from e
            continue
        try:
            record = SampleRecord.model_validate(data)
        except ValidationError as e:
            raise ManifestError(f"invalid record: {e}", line=line_no) from e
        if record.sample_id in seen:
            raise ManifestError(
                f"duplicate sample_id {record.sample_id!r} "
                f"(first seen on line {seen[record.sample_id]})",
                line=line_no,
            )
        seen[record.sample_id] = line_no
        records.append(record)

    manifest = DatasetManifest(records, base, header)
    if check_files:
        check_manifest_files(manifest)
    logger.info("Loaded manifest %s with %d records", manifest_path, len(records))
    return manifest


def check_manifest_files(manifest: DatasetManifest) -> None:
    for record in manifest.records:
        for kind in ("image", "mask", "defect_mask"):
            relative = getattr(record, kind)
            if relative is not None and not manifest.resolve(relative).is_file():
                raise ManifestError(
                    f"sample {record.sample_id}: {kind} file {relative} does not exist"
                )


def dump_manifest(manifest: DatasetManifest) -> str:
    lines = []
    if manifest.header is not None:
        lines.append(
            json.dumps(
                {
                    MANIFEST_HEADER_KEY: manifest.header.model_dump(
                        mode="json", exclude_none=True
                    )
                },
                sort_keys=True,
            )
        )
    for record in manifest.records:
        data = record.model_dump(mode="json", exclude_none=True)
        lines.append(json.dumps(data, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def write_manifest(manifest: DatasetManifest, path: PathLike) -> Path:
    return atomic_write_text(path, dump_manifest(manifest))


def filter_manifest(
    manifest: DatasetManifest, predicate: Callable[[SampleRecord], bool]
) -> DatasetManifest:
    """Records for which ``predicate`` holds; root and header are kept"""
    kept = [r for r in manifest.records if predicate(r)]
    logger.debug("Filter kept %d of %d records", len(kept), len(manifest.records))
    return DatasetManifest(kept, manifest.root, manifest.header)


@dataclass
class LoadedSample:
    """A record together with its pixels"""

    record: SampleRecord
    image: np.ndarray
    mask: Optional[np.ndarray] = None
    defect_mask: Optional[np.ndarray] = None

    def with_arrays(
        self,
        image: np.ndarray,
        mask: Optional[np.ndarray],
        defect_mask: Optional[np.ndarray],
        **record_updates: str,
    ) -> "LoadedSample":
        record = self.record
        if record_updates:
            record = record.model_copy(update=record_updates)
        return replace(
            self, record=record, image=image, mask=mask, defect_mask=defect_mask
        )


def _optional_mask(
    manifest: DatasetManifest, relative: Optional[str]
) -> Optional[np.ndarray]:
    return read_mask(manifest.resolve(relative)) if relative else None


def load_samples(manifest: DatasetManifest) -> List[LoadedSample]:
    samples = []
    for record in manifest.records:
        samples.append(
            LoadedSample(
                record,
                read_image(manifest.resolve(record.image)),
                _optional_mask(manifest, record.mask),
                _optional_mask(manifest, record.defect_mask),
            )
        )
    return samples


def write_samples(
    samples: Sequence[LoadedSample],
    out_dir: PathLike,
    header: Optional[ManifestHeader] = None,
) -> DatasetManifest:
    """Write ``images/``, ``masks/``, ``defects/`` PNGs plus ``manifest.jsonl``"""
    root = Path(out_dir)
    records = []
    for sample in samples:
        sid = sample.record.sample_id
        updates: Dict[str, Optional[str]] = {"image": f"images/{sid}.png"}
        write_image(root / f"images/{sid}.png", sample.image)
        updates["mask"] = None
        updates["defect_mask"] = None
        if sample.mask is not None:
            updates["mask"] = f"masks/{sid}.png"
            write_image(root / f"masks/{sid}.png", sample.mask)
        if sample.defect_mask is not None:
            updates["defect_mask"] = f"defects/{sid}.png"
            write_image(root / f"defects/{sid}.png", sample.defect_mask)
        records.append(sample.record.model_copy(update=updates))
    manifest = DatasetManifest(records, root, header)
    write_manifest(manifest, root / MANIFEST_FILENAME)
    return manifest
