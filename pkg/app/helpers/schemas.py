"""Data validation schemas and type definitions"""

import math
import re
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from .constants import (
    DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_CI_LEVEL,
    DEFAULT_FOLDS,
    SAMPLE_ID_PATTERN,
)

# ---------------------------------------------------------------------------
# Configuration sections
# ---------------------------------------------------------------------------


class PoolingMode(str, Enum):
    """Pooling applied after the rectifier"""

    AVERAGE = "avg"
    MAX = "max"


class ExtractorConfig(BaseModel):
    """Frozen random-filter feature extractor"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0)
    num_filters: int = Field(default=8, ge=1, description="Channels C")
    kernel_size: int = Field(default=3, ge=1)
    pool_size: int = Field(default=2, ge=1)
    pooling: PoolingMode = PoolingMode.AVERAGE
    scale_ratios: Tuple[float, float, float] = Field(
        default=(1.0, 0.5, 0.25),
        description="Full, half and quarter resolution",
    )

    @field_validator("scale_ratios")
    @classmethod
    def ratios_are_unit_fractions(
        cls, v: Tuple[float, float, float]
    ) -> Tuple[float, float, float]:
        for ratio in v:
            if ratio <= 0 or ratio > 1:
                raise ValueError(f"scale ratio {ratio} not in (0, 1]")
            inverse = 1.0 / ratio
            if abs(inverse - round(inverse)) > 1e-9:
                raise ValueError(f"scale ratio {ratio} is not 1/n")
        if list(v) != sorted(v, reverse=True):
            raise ValueError("scale ratios must be decreasing")
        return v


class FlowConfig(BaseModel):
    """Multi-scale affine coupling flow"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    num_blocks: int = Field(default=4, ge=0)
    hidden_units: int = Field(default=64, ge=1)
    clamp: float = Field(default=1.9, gt=0, description="Soft clamp alpha on s")
    cross_scale: bool = True
    init_scale: float = Field(
        default=0.01, ge=0, description="Std of the conditioner output layer at init"
    )
    aggregation: Literal["mean", "max"] = "mean"
    background_noise: float = Field(
        default=0.5,
        ge=0,
        description="Noise std of the background flow, relative to feature std",
    )


class TrainConfig(BaseModel):
    """First-order training loop; full-scale defaults are 240 epochs, eval every 60"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(default=40, ge=0)
    eval_every: int = Field(default=10, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    grad_clip: float = Field(default=1.0, gt=0, description="Global gradient norm")
    batch_size: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)


class OodHypothesis(str, Enum):
    """Distribution hypothesis gating global synthesis"""

    NONE = "none"
    HYPERSPHERE = "hypersphere"
    MANIFOLD = "manifold"


class DiscriminatorConfig(BaseModel):
    """Feature adaptor + per-position discriminator"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden_units: int = Field(default=32, ge=1)
    epochs: int = Field(default=20, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=4, ge=1)
    grad_clip: float = Field(default=1.0, gt=0)
    init_scale: float = Field(default=0.1, gt=0)
    hypothesis: OodHypothesis = OodHypothesis.MANIFOLD
    neighbors: int = Field(default=3, ge=1)
    manifold_store_size: int = Field(default=512, ge=1)
    scale_index: int = Field(default=0, ge=0, description="Feature scale used")
    background_logit: Optional[float] = Field(
        default=None,
        description="Fixed logit for all-zero (blacked-out) feature vectors",
    )


class TextureSource(str, Enum):
    """Where local-synthesis overlays come from"""

    PROCEDURAL = "procedural"
    DIRECTORY = "directory"


class SynthLocalConfig(BaseModel):
    """Mask/texture blending of local anomalies"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    texture_source: TextureSource = TextureSource.PROCEDURAL
    texture_dir: Optional[str] = None
    opacity: float = Field(default=0.5, gt=0, le=1, description="Blend opacity beta")
    blob_count: Tuple[int, int] = (1, 3)
    blob_area: Tuple[float, float] = Field(
        default=(0.01, 0.10), description="Fraction of the foreground per mask"
    )
    min_blob_size: int = Field(default=1, ge=1, description="Minimum semi-axis, px")
    noise_cells: int = Field(default=4, ge=1, description="Value-noise grid size")
    texture_range: Optional[Tuple[float, float]] = Field(
        default=None,
        description="Value range of textures; None uses the sample's own range",
    )
    min_contrast: float = Field(default=0.25, gt=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthLocalConfig":
        lo, hi = self.blob_count
        if lo < 1 or hi < lo:
            raise ValueError("blob_count must satisfy 1 <= min <= max")
        a_lo, a_hi = self.blob_area
        if not 0 < a_lo <= a_hi <= 1:
            raise ValueError("blob_area must satisfy 0 < min <= max <= 1")
        if self.texture_source == TextureSource.DIRECTORY and not self.texture_dir:
            raise ValueError("texture_dir is required for directory textures")
        return self


class SynthGlobalConfig(BaseModel):
    """Noisy truncated gradient ascent in adapted feature space"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    step_size: float = Field(default=0.1, ge=0, description="eta")
    truncation: float = Field(default=0.2, ge=0, description="delta per step")
    noise_std: float = Field(default=0.05, ge=0, description="sigma")
    steps: int = Field(default=5, ge=0)
    relative_to_feature_std: bool = Field(
        default=True, description="Scale delta and sigma by the input std"
    )
    normalize_gradient: bool = Field(
        default=False, description="Scale the gradient to unit length per position"
    )


class ThresholdCriterion(str, Enum):
    """Operating-point selection on a ROC curve"""

    YOUDEN = "youden"
    SENSITIVITY_SPECIFICITY = "sensitivity-specificity"
    COST = "cost"


class ProtocolConfig(BaseModel):
    """Repeated three-way-split risk estimation"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    folds: int = Field(default=DEFAULT_FOLDS, ge=1, description="K")
    criterion: ThresholdCriterion = ThresholdCriterion.YOUDEN
    cost_fp: float = Field(default=1.0, ge=0)
    cost_fn: float = Field(default=1.0, ge=0)
    nominal_train_fraction: Optional[float] = Field(default=None, gt=0, lt=1)
    ci_level: float = Field(default=DEFAULT_CI_LEVEL, gt=0, lt=1)
    bootstrap_resamples: int = Field(default=DEFAULT_BOOTSTRAP_RESAMPLES, ge=1)


# ---------------------------------------------------------------------------
# Dataset records
# ---------------------------------------------------------------------------


class Label(str, Enum):
    """Ground-truth class of a sample"""

    NOMINAL = "nominal"
    ANOMALOUS = "anomalous"


class SampleRecord(BaseModel):
    """One image of one physical object"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sample_id: str = Field(..., min_length=1)
    object_id: str = Field(..., min_length=1)
    label: Label
    image: str = Field(..., min_length=1, description="Path relative to the root")
    mask: Optional[str] = None
    defect_mask: Optional[str] = None

    @field_validator("sample_id")
    @classmethod
    def sample_id_is_filename_safe(cls, v: str) -> str:
        if not re.match(SAMPLE_ID_PATTERN, v):
            raise ValueError(f"sample_id {v!r} must match {SAMPLE_ID_PATTERN}")
        return v

    @property
    def is_anomalous(self) -> bool:
        return self.label == Label.ANOMALOUS


class CanvasSpec(BaseModel):
    """Common canvas every object fits on"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)


class ManifestHeader(BaseModel):
    """Optional first line of a manifest file"""

    model_config = ConfigDict(extra="forbid")

    version: int = 1
    canvas: Optional[CanvasSpec] = None
    config_hash: Optional[str] = None
    config: Optional[Dict[str, Any]] = None


# ---------------------------------------------------------------------------
# Scores and reports
# ---------------------------------------------------------------------------


class ScoreRecord(BaseModel):
    """Per-image anomaly score, optionally with its localization map"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sample_id: str
    label: Optional[Label] = None
    score: float
    localization: Optional[Any] = Field(default=None, exclude=True)

    @field_validator("score")
    @classmethod
    def score_is_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("score must be finite")
        return v


class ThresholdRule(BaseModel):
    """Selected operating point"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    criterion: ThresholdCriterion
    tau: float
    tpr: float
    fpr: float
    objective: float = Field(..., description="Value of the criterion at tau")


class ConfusionMetrics(BaseModel):
    """Classification metrics; None marks an undefined (0/0) value"""

    tp: int
    fp: int
    tn: int
    fn: int
    tpr: Optional[float] = None
    fpr: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    accuracy: Optional[float] = None
    balanced_accuracy: Optional[float] = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class RocPoints(BaseModel):
    """Serializable ROC curve"""

    fpr: List[float]
    tpr: List[float]


class FoldReport(BaseModel):
    """Outcome of one repetition of the protocol"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    fold: int
    seed: int
    tau: float
    auroc_threshold_part: float
    auroc_inference: Optional[float] = None
    metrics: ConfusionMetrics
    train_size: int
    threshold_size: int
    inference_size: int
    roc_inference: Optional[RocPoints] = None
    inference_scores: List[float] = Field(default_factory=list)
    inference_labels: List[Label] = Field(default_factory=list)

    def metric(self, name: str) -> Optional[float]:
        """Look up a fold-level metric by report name"""
        if name == "auroc_threshold_part":
            return self.auroc_threshold_part
        if name == "auroc_inference":
            return self.auroc_inference
        value = getattr(self.metrics, name)
        return None if value is None else float(value)


class MetricSummary(BaseModel):
    """Mean, spread and bootstrap CI of one metric across folds"""

    name: str
    mean: Optional[float] = None
    std: Optional[float] = None
    ci_level: float
    ci_lower: Optional[float] = None
    ci_upper: Optional[float] = None
    defined_folds: int


class FoldFailure(BaseModel):
    """Record of a fold that aborted"""

    fold: int
    error: str
    exit_code: int


class RiskReport(BaseModel):
    """Result of the repeated risk-estimation protocol"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    model: str
    dataset: str
    folds: int
    seed: int
    criterion: ThresholdCriterion
    config: Dict[str, Any] = Field(default_factory=dict)
    fold_reports: List[FoldReport] = Field(default_factory=list)
    summary: List[MetricSummary] = Field(default_factory=list)
    failures: List[FoldFailure] = Field(default_factory=list)

    def summary_for(self, name: str) -> MetricSummary:
        for item in self.summary:
            if item.name == name:
                return item
        raise KeyError(name)


class EpochRecord(BaseModel):
    """Loss (and optional evaluation metrics) after one epoch"""

    epoch: int
    loss: float
    metrics: Optional[Dict[str, float]] = None


class ExperimentRecord(BaseModel):
    """Replication metadata written next to every command output"""

    command: str
    timestamp: str
    config_hash: str
    input_hash: str
    outputs: List[str]
    config: Dict[str, Any]
