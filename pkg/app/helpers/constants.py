"""File-format constants and protocol defaults"""

# Feature/localization-map container
FEATURE_MAGIC = b"ADWF"
FEATURE_VERSION = 1
FEATURE_SUFFIX = ".adwf"
# A single tensor larger than this is treated as a corrupt header
MAX_TENSOR_VALUES = 1 << 31

# Model checkpoint container
CHECKPOINT_MAGIC = b"ADWM"
CHECKPOINT_VERSION = 1
MODEL_KIND_TAGS = {
    "flow": 1,
    "discriminator": 2,
}

# Manifests
MANIFEST_HEADER_KEY = "_header"
MANIFEST_FILENAME = "manifest.jsonl"
SAMPLE_ID_PATTERN = r"^[A-Za-z0-9][A-Za-z0-9._-]*$"

# 8-bit masks: value > 127 is foreground
MASK_THRESHOLD = 127

# Right-angle rotations supported by rotate_augment (degrees, counterclockwise)
ROTATION_ANGLES = (90, 180, 270)

# Score CSV
SCORE_CSV_HEADER = ("sample_id", "label", "score")

# Protocol defaults
DEFAULT_FOLDS = 10
DEFAULT_BOOTSTRAP_RESAMPLES = 2000
DEFAULT_CI_LEVEL = 0.95

# Metrics aggregated over folds, in report order
FOLD_METRICS = (
    "auroc_threshold_part",
    "auroc_inference",
    "tpr",
    "fpr",
    "precision",
    "recall",
    "f1",
    "accuracy",
    "balanced_accuracy",
)

# Marker printed for undefined metrics (0/0); JSON uses null
UNDEFINED_METRIC = "n/a"

# Sidecar suffix for experiment records
RECORD_SUFFIX = ".record.json"

# Logit pinned on all-zero (blacked-out) feature vectors; expit(-800) == 0.0
BLANK_FEATURE_LOGIT = -800.0
