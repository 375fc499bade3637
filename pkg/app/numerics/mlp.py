"""Multi-layer perceptron with hand-written reverse mode

The perceptron serves as coupling conditioner, feature adaptor and
discriminator. Only affine layers followed by an elementwise activation are
supported; gradients are derived by hand for exactly that operator set.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.helpers.errors import ShapeError

from .rng import RngStream


class Activation(str, Enum):
    """Elementwise nonlinearity applied after a layer"""

    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"


@dataclass
class Layer:
    """Affine map ``x @ weight + bias`` followed by ``activation``"""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[1])


@dataclass
class MlpParams:
    """Ordered list of layers; adjacent dimensions must agree"""

    layers: List[Layer] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise ShapeError(
                    f"layer {i}: weight {layer.weight.shape} and "
                    f"bias {layer.bias.shape} do not form an affine map"
                )
            if i and self.layers[i - 1].out_dim != layer.in_dim:
                raise ShapeError(
                    f"layer {i} expects {layer.in_dim} inputs, "
                    f"previous layer gives {self.layers[i - 1].out_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> List[np.ndarray]:
        """Weight and bias arrays in layer order (live views, not copies)"""
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend((layer.weight, layer.bias))
        return params

    def copy(self) -> "MlpParams":
        return MlpParams(
            [
                Layer(layer.weight.copy(), layer.bias.copy(), layer.activation)
                for layer in self.layers
            ]
        )

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            [
                Layer(
                    np.zeros_like(layer.weight),
                    np.zeros_like(layer.bias),
                    layer.activation,
                )
                for layer in self.layers
            ]
        )

    def scaled_output(self, factor: float) -> "MlpParams":
        """Copy with the final layer's weights multiplied by ``factor``"""
        scaled = self.copy()
        scaled.layers[-1].weight *= factor
        return scaled

    @classmethod
    def initialize(
        cls,
        dims: Sequence[int],
        activations: Sequence[Activation],
        rng: RngStream,
        output_scale: Optional[float] = None,
    ) -> "MlpParams":
        """Gaussian init scaled by 1/sqrt(fan_in); biases start at zero

        Args:
            dims: Layer widths including input and output, e.g. ``[4, 32, 2]``
            activations: One activation per layer (``len(dims) - 1``)
            rng: Stream the weights are drawn from
            output_scale: If given, std of the final layer's weights
        """
        if len(activations) != len(dims) - 1:
            raise ShapeError("need one activation per layer")
        layers: List[Layer] = []
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            std = 1.0 / np.sqrt(max(fan_in, 1))
            if output_scale is not None and i == len(dims) - 2:
                std = output_scale
            weight = np.asarray(rng.draw_normal((fan_in, fan_out)), dtype=np.float64)
            layers.append(
                Layer(weight * std, np.zeros(fan_out), Activation(activations[i]))
            )
        return cls(layers)

    @classmethod
    def identity(cls, dim: int) -> "MlpParams":
        return cls([Layer(np.eye(dim), np.zeros(dim), Activation.IDENTITY)])

    @classmethod
    def constant(cls, in_dim: int, bias: np.ndarray) -> "MlpParams":
        """Single layer with zero weights: outputs ``bias`` for every input"""
        bias = np.asarray(bias, dtype=np.float64)
        return cls(
            [Layer(np.zeros((in_dim, bias.shape[0])), bias.copy(), Activation.IDENTITY)]
        )


def _activate(pre: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.TANH:
        return np.tanh(pre)
    if activation == Activation.RELU:
        return np.maximum(pre, 0.0)
    return pre


def _activation_grad(
    pre: np.ndarray, post: np.ndarray, activation: Activation
) -> np.ndarray:
    if activation == Activation.TANH:
        return 1.0 - post * post
    if activation == Activation.RELU:
        return (pre > 0.0).astype(pre.dtype)
    return np.ones_like(pre)


def _as_rows(params: MlpParams, x: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != params.in_dim:
        raise ShapeError(
            f"input with shape {x.shape} does not match MLP input dim {params.in_dim}"
        )
    lead = x.shape[:-1]
    return x.reshape(-1, params.in_dim), lead


def mlp_forward(
    params: MlpParams, x: np.ndarray
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray, np.ndarray]]]:
    """Forward pass keeping (input, pre-activation, output) per layer"""
    rows, lead = _as_rows(params, x)
    cache: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    h = rows
    for layer in params.layers:
        pre = h @ layer.weight + layer.bias
        post = _activate(pre, layer.activation)
        cache.append((h, pre, post))
        h = post
    return h.reshape(*lead, params.out_dim), cache


def mlp_apply(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Apply the network to the last axis of ``x``"""
    out, _ = mlp_forward(params, x)
    return out


def mlp_grad(
    params: MlpParams, x: np.ndarray, upstream: np.ndarray
) -> Tuple[MlpParams, np.ndarray]:
    """Reverse-mode gradients of ``<upstream, mlp_apply(params, x)>``

    Returns:
        Parameter gradients shaped like ``params`` and the input gradient
        shaped like ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    out, cache = mlp_forward(params, x)
    if upstream.shape != out.shape:
        raise ShapeError(
            f"upstream gradient {upstream.shape} does not match output {out.shape}"
        )

    grad = upstream.reshape(-1, params.out_dim)
    grad_layers: List[Layer] = []
    for layer, (h_in, pre, post) in zip(reversed(params.layers), reversed(cache)):
        delta = grad * _activation_grad(pre, post, layer.activation)
        grad_layers.append(
            Layer(h_in.T @ delta, delta.sum(axis=0), layer.activation)
        )
        grad = delta @ layer.weight.T

    grad_layers.reverse()
    return MlpParams(grad_layers), grad.reshape(x.shape)
