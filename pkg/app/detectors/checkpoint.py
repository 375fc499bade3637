"""ADWM model checkpoint container

Little-endian layout::

    magic "ADWM" | version u16 | kind tag u16 | metadata length u32
    metadata (UTF-8 JSON, sorted keys) | arrays back to back

The metadata holds the model configuration and, for every array, its name,
dtype and shape in storage order. Parameters are float64 and permutations
int64, so a load after a save reproduces every value exactly.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from app.features.normalize import FeatureNormalizer
from app.helpers.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, MODEL_KIND_TAGS
from app.helpers.errors import FeatureFormatError
from app.helpers.schemas import DiscriminatorConfig, FlowConfig, OodHypothesis
from app.helpers.storage import atomic_write_bytes
from app.numerics.mlp import Activation, Layer, MlpParams

from .coupling import CouplingBlock
from .flow import CouplingFlow
from .synthdisc import AdaptorDiscriminator, OodCriterion

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sHHI")
_DTYPES = {"f8": np.dtype("<f8"), "i8": np.dtype("<i8")}

NamedArray = Tuple[str, np.ndarray]


@dataclass
class Checkpoint:
    """Decoded container: model kind, metadata and named arrays"""

    kind: str
    meta: Dict[str, Any]
    arrays: Dict[str, np.ndarray]


def encode_checkpoint(
    kind: str, meta: Dict[str, Any], arrays: List[NamedArray]
) -> bytes:
    if kind not in MODEL_KIND_TAGS:
        raise ValueError(f"unknown model kind {kind!r}")
    index = []
    payload = []
    for name, array in arrays:
        code = "i8" if np.issubdtype(array.dtype, np.integer) else "f8"
        stored = np.ascontiguousarray(array, dtype=_DTYPES[code])
        index.append({"name": name, "dtype": code, "shape": list(stored.shape)})
        payload.append(stored.tobytes())
    header_json = json.dumps(
        {**meta, "arrays": index}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    header = _HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, MODEL_KIND_TAGS[kind], len(header_json)
    )
    return header + header_json + b"".join(payload)


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise FeatureFormatError("file shorter than the ADWM header")
    magic, version, tag, meta_len = _HEADER.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise FeatureFormatError(f"unsupported ADWM version {version}")
    kinds = {v: k for k, v in MODEL_KIND_TAGS.items()}
    if tag not in kinds:
        raise FeatureFormatError(f"unknown model kind tag {tag}")

    offset = _HEADER.size
    try:
        meta = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FeatureFormatError(f"corrupt checkpoint metadata: {e}") from e
    offset += meta_len

    arrays: Dict[str, np.ndarray] = {}
    for entry in meta.pop("arrays", []):
        dtype = _DTYPES[entry["dtype"]]
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        size = count * dtype.itemsize
        if len(data) - offset < size:
            raise FeatureFormatError(
                f"checkpoint truncated inside array {entry['name']}"
            )
        values = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        arrays[entry["name"]] = values.astype(dtype.type).reshape(shape)
        offset += size
    if offset != len(data):
        raise FeatureFormatError(f"{len(data) - offset} trailing bytes in checkpoint")
    return Checkpoint(kinds[tag], meta, arrays)


def save_checkpoint(
    path: Union[str, Path], kind: str, meta: Dict[str, Any], arrays: List[NamedArray]
) -> Path:
    return atomic_write_bytes(path, encode_checkpoint(kind, meta, arrays))


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FeatureFormatError(f"Cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(data)


def _mlp_arrays(prefix: str, mlp: MlpParams) -> Tuple[List[str], List[NamedArray]]:
    activations = [layer.activation.value for layer in mlp.layers]
    arrays: List[NamedArray] = []
    for i, layer in enumerate(mlp.layers):
        arrays.append((f"{prefix}.{i}.weight", layer.weight))
        arrays.append((f"{prefix}.{i}.bias", layer.bias))
    return activations, arrays


def _mlp_from(
    prefix: str, activations: List[str], arrays: Dict[str, np.ndarray]
) -> MlpParams:
    try:
        return MlpParams(
            [
                Layer(
                    arrays[f"{prefix}.{i}.weight"].copy(),
                    arrays[f"{prefix}.{i}.bias"].copy(),
                    Activation(act),
                )
                for i, act in enumerate(activations)
            ]
        )
    except KeyError as e:
        raise FeatureFormatError(f"checkpoint is missing array {e}") from e


def _normalizer_arrays(normalizer: Optional[FeatureNormalizer]) -> List[NamedArray]:
    if normalizer is None:
        return []
    arrays: List[NamedArray] = []
    for i, (mean, std) in enumerate(zip(normalizer.means, normalizer.stds)):
        arrays.append((f"normalizer.{i}.mean", mean))
        arrays.append((f"normalizer.{i}.std", std))
    return arrays


def _normalizer_from(
    count: int, arrays: Dict[str, np.ndarray]
) -> Optional[FeatureNormalizer]:
    if count == 0:
        return None
    return FeatureNormalizer(
        [arrays[f"normalizer.{i}.mean"].copy() for i in range(count)],
        [arrays[f"normalizer.{i}.std"].copy() for i in range(count)],
    )


def flow_checkpoint(
    flow: CouplingFlow, normalizer: Optional[FeatureNormalizer] = None
) -> Tuple[Dict[str, Any], List[NamedArray]]:
    arrays: List[NamedArray] = []
    blocks = []
    for k, block in enumerate(flow.blocks):
        arrays.append((f"block{k}.permutation", block.permutation))
        s_act, s_arrays = _mlp_arrays(f"block{k}.s", block.conditioner_s)
        t_act, t_arrays = _mlp_arrays(f"block{k}.t", block.conditioner_t)
        arrays.extend(s_arrays + t_arrays)
        blocks.append({"s": s_act, "t": t_act})
    arrays.extend(_normalizer_arrays(normalizer))
    meta = {
        "config": flow.config.model_dump(mode="json"),
        "dim": flow.dim,
        "num_scales": flow.num_scales,
        "blocks": blocks,
        "normalizer_scales": normalizer.num_scales if normalizer else 0,
    }
    return meta, arrays


def flow_from_checkpoint(
    checkpoint: Checkpoint,
) -> Tuple[CouplingFlow, Optional[FeatureNormalizer]]:
    if checkpoint.kind != "flow":
        raise FeatureFormatError(f"checkpoint holds a {checkpoint.kind}, not a flow")
    meta, arrays = checkpoint.meta, checkpoint.arrays
    cfg = FlowConfig.model_validate(meta["config"])
    blocks = [
        CouplingBlock(
            arrays[f"block{k}.permutation"].copy(),
            _mlp_from(f"block{k}.s", spec["s"], arrays),
            _mlp_from(f"block{k}.t", spec["t"], arrays),
            clamp=cfg.clamp,
            cross_scale=cfg.cross_scale,
            num_scales=meta["num_scales"],
        )
        for k, spec in enumerate(meta["blocks"])
    ]
    flow = CouplingFlow(meta["dim"], meta["num_scales"], blocks, cfg)
    return flow, _normalizer_from(meta["normalizer_scales"], arrays)


def discriminator_checkpoint(
    model: AdaptorDiscriminator, normalizer: Optional[FeatureNormalizer] = None
) -> Tuple[Dict[str, Any], List[NamedArray]]:
    a_act, arrays = _mlp_arrays("adaptor", model.adaptor)
    d_act, d_arrays = _mlp_arrays("discriminator", model.discriminator)
    arrays.extend(d_arrays)
    criterion: Optional[Dict[str, Any]] = None
    if model.criterion is not None:
        c = model.criterion
        criterion = {
            "kind": c.kind.value,
            "radius": c.radius,
            "neighbors": c.neighbors,
            "margin": c.margin,
        }
        if c.center is not None:
            arrays.append(("criterion.center", c.center))
        if c.store is not None:
            arrays.append(("criterion.store", c.store))
    arrays.extend(_normalizer_arrays(normalizer))
    meta = {
        "config": model.config.model_dump(mode="json"),
        "adaptor": a_act,
        "discriminator": d_act,
        "criterion": criterion,
        "normalizer_scales": normalizer.num_scales if normalizer else 0,
    }
    return meta, arrays


def discriminator_from_checkpoint(
    checkpoint: Checkpoint,
) -> Tuple[AdaptorDiscriminator, Optional[FeatureNormalizer]]:
    if checkpoint.kind != "discriminator":
        raise FeatureFormatError(
            f"checkpoint holds a {checkpoint.kind}, not a discriminator"
        )
    meta, arrays = checkpoint.meta, checkpoint.arrays
    criterion = None
    if meta.get("criterion"):
        spec = meta["criterion"]
        criterion = OodCriterion(
            OodHypothesis(spec["kind"]),
            center=arrays.get("criterion.center"),
            radius=spec["radius"],
            store=arrays.get("criterion.store"),
            neighbors=spec["neighbors"],
            margin=spec.get("margin", 0.0),
        )
    model = AdaptorDiscriminator(
        _mlp_from("adaptor", meta["adaptor"], arrays),
        _mlp_from("discriminator", meta["discriminator"], arrays),
        DiscriminatorConfig.model_validate(meta["config"]),
        criterion,
    )
    return model, _normalizer_from(meta["normalizer_scales"], arrays)
