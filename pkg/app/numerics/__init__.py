"""Deterministic array arithmetic: perceptrons, gradients, random streams"""

from .gradcheck import grad_check, numerical_gradient
from .mlp import Activation, Layer, MlpParams, mlp_apply, mlp_forward, mlp_grad
from .optim import Adam, clip_grad_norm, global_norm
from .rng import RngStream, derive_seed, seeded_rng

__all__ = [
    "Activation",
    "Adam",
    "Layer",
    "MlpParams",
    "RngStream",
    "clip_grad_norm",
    "derive_seed",
    "global_norm",
    "grad_check",
    "mlp_apply",
    "mlp_forward",
    "mlp_grad",
    "numerical_gradient",
    "seeded_rng",
]
