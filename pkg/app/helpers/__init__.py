"""Shared helpers: schemas, errors, constants, formatting"""

from .constants import (
    CHECKPOINT_MAGIC,
    FEATURE_MAGIC,
    FOLD_METRICS,
    MASK_THRESHOLD,
    ROTATION_ANGLES,
    UNDEFINED_METRIC,
)
from .errors import (
    ConfigError,
    FeatureFormatError,
    FoldFailedError,
    InputValidationError,
    ManifestError,
    NumericalError,
    ProtocolFailedError,
    ShapeError,
    SplitError,
    SynthesisError,
    TrainingDivergedError,
    TruncatedFeatureFileError,
    WorkbenchError,
)
from .schemas import (
    CanvasSpec,
    ConfusionMetrics,
    DiscriminatorConfig,
    ExtractorConfig,
    FlowConfig,
    FoldReport,
    Label,
    ProtocolConfig,
    RiskReport,
    SampleRecord,
    ScoreRecord,
    SynthGlobalConfig,
    SynthLocalConfig,
    ThresholdCriterion,
    ThresholdRule,
    TrainConfig,
)
from .strings import format_ci, format_metric, markdown_table, pluralize

__all__ = [
    # Constants
    "CHECKPOINT_MAGIC",
    "FEATURE_MAGIC",
    "FOLD_METRICS",
    "MASK_THRESHOLD",
    "ROTATION_ANGLES",
    "UNDEFINED_METRIC",
    # Errors
    "ConfigError",
    "FeatureFormatError",
    "FoldFailedError",
    "InputValidationError",
    "ManifestError",
    "NumericalError",
    "ProtocolFailedError",
    "ShapeError",
    "SplitError",
    "SynthesisError",
    "TrainingDivergedError",
    "TruncatedFeatureFileError",
    "WorkbenchError",
    # Schemas
    "CanvasSpec",
    "ConfusionMetrics",
    "DiscriminatorConfig",
    "ExtractorConfig",
    "FlowConfig",
    "FoldReport",
    "Label",
    "ProtocolConfig",
    "RiskReport",
    "SampleRecord",
    "ScoreRecord",
    "SynthGlobalConfig",
    "SynthLocalConfig",
    "ThresholdCriterion",
    "ThresholdRule",
    "TrainConfig",
    # Strings
    "format_ci",
    "format_metric",
    "markdown_table",
    "pluralize",
]
