"""Anomaly detectors: coupling flow, synthesis-trained discriminator, references"""

from .base import (
    Detector,
    DetectorFactory,
    DetectorKind,
    detector_factory,
    make_detector,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .coupling import (
    CouplingBlock,
    coupling_backward,
    coupling_forward,
    coupling_inverse,
)
from .feature_store import FeatureStore, feature_path
from .flow import (
    CouplingFlow,
    LogDensityResult,
    image_score,
    likelihood_ratio_score,
    localization_map,
    log_density,
    nll_loss,
    sample,
    train_background_flow,
    train_flow,
)
from .learned import DiscriminatorDetector, FlowDetector, load_detector
from .reference import GaussianDetector, OracleDetector, RandomDetector
from .synthdisc import (
    AdaptorDiscriminator,
    Branch,
    OodCriterion,
    adapt,
    disc_score,
    fit_criterion,
    ood_score,
    synth_global,
    three_branch_loss,
    train_discriminator,
)
from .synthesis import synth_local

__all__ = [
    "AdaptorDiscriminator",
    "Branch",
    "CouplingBlock",
    "CouplingFlow",
    "Detector",
    "DetectorFactory",
    "DetectorKind",
    "DiscriminatorDetector",
    "FeatureStore",
    "FlowDetector",
    "GaussianDetector",
    "LogDensityResult",
    "OodCriterion",
    "OracleDetector",
    "RandomDetector",
    "adapt",
    "coupling_backward",
    "coupling_forward",
    "coupling_inverse",
    "detector_factory",
    "disc_score",
    "feature_path",
    "fit_criterion",
    "image_score",
    "likelihood_ratio_score",
    "load_checkpoint",
    "load_detector",
    "localization_map",
    "log_density",
    "make_detector",
    "nll_loss",
    "ood_score",
    "sample",
    "save_checkpoint",
    "synth_global",
    "synth_local",
    "three_branch_loss",
    "train_background_flow",
    "train_discriminator",
    "train_flow",
]
