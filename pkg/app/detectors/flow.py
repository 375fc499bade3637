"""Multi-scale normalizing flow: density, training, scores and maps

The flow maps features ``x`` to latents ``z`` through a stack of coupling
blocks; ``log p(x) = sum_pos [log N(z_pos; 0, I) + logdet_pos]``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from app.helpers.errors import NumericalError, ShapeError, TrainingDivergedError
from app.helpers.schemas import EpochRecord, FlowConfig, TrainConfig
from app.numerics.mlp import Activation, MlpParams
from app.numerics.optim import Adam, clip_grad_norm
from app.numerics.rng import RngStream, seeded_rng

from .coupling import (
    CouplingBlock,
    Scales,
    conditioner_input_dim,
    coupling_backward,
    coupling_forward,
    coupling_inverse,
)

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)

Aggregation = Literal["mean", "max"]
EvalFn = Callable[["CouplingFlow"], Dict[str, float]]


@dataclass
class CouplingFlow:
    """Ordered coupling blocks over ``num_scales`` scales of width ``dim``"""

    dim: int
    num_scales: int
    blocks: List[CouplingBlock] = field(default_factory=list)
    config: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ShapeError("flows need at least two dimensions per position")
        for i, block in enumerate(self.blocks):
            if block.dim != self.dim or block.num_scales != self.num_scales:
                raise ShapeError(f"block {i} does not match the flow dimensions")

    @classmethod
    def build(
        cls, dim: int, num_scales: int, cfg: FlowConfig, rng: RngStream
    ) -> "CouplingFlow":
        """Random permutations and small conditioner outputs (near identity)"""
        blocks: List[CouplingBlock] = []
        previous: Optional[np.ndarray] = None
        in_dim = conditioner_input_dim(dim, num_scales, cfg.cross_scale)
        out_dim = dim - dim // 2
        for k in range(cfg.num_blocks):
            stream = rng.child(k)
            perm = stream.generator.permutation(dim)
            if previous is not None and np.array_equal(perm, previous):
                perm = perm[::-1].copy()
            previous = perm
            dims = [in_dim, cfg.hidden_units, out_dim]
            acts = [Activation.TANH, Activation.IDENTITY]
            blocks.append(
                CouplingBlock(
                    perm,
                    MlpParams.initialize(dims, acts, stream.child(0), cfg.init_scale),
                    MlpParams.initialize(dims, acts, stream.child(1), cfg.init_scale),
                    clamp=cfg.clamp,
                    cross_scale=cfg.cross_scale,
                    num_scales=num_scales,
                )
            )
        return cls(dim, num_scales, blocks, cfg)

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for block in self.blocks:
            params.extend(block.parameters())
        return params

    def copy(self) -> "CouplingFlow":
        return CouplingFlow(
            self.dim, self.num_scales, [b.copy() for b in self.blocks], self.config
        )


@dataclass
class LogDensityResult:
    """Per-sample log density with the latents it was computed from

    ``logp`` and ``logdet`` are (B,); ``logp_positions`` holds the (B, P)
    per-position contributions of every scale.
    """

    logp: np.ndarray
    latent: Scales
    logdet: np.ndarray
    logp_positions: Scales


def _as_scales(flow: CouplingFlow, x: Sequence[np.ndarray]) -> Scales:
    if isinstance(x, np.ndarray):
        x = [x]
    scales = [np.asarray(xs, dtype=np.float64) for xs in x]
    if len(scales) != flow.num_scales:
        raise ShapeError(f"flow expects {flow.num_scales} scales, got {len(scales)}")
    batch = None
    for i, xs in enumerate(scales):
        if xs.ndim != 3 or xs.shape[-1] != flow.dim:
            raise ShapeError(
                f"scale {i}: expected (B, P, {flow.dim}), got {tuple(xs.shape)}"
            )
        if batch is not None and xs.shape[0] != batch:
            raise ShapeError("all scales must hold the same number of samples")
        batch = xs.shape[0]
        if not np.all(np.isfinite(xs)):
            raise NumericalError(f"scale {i}: non-finite input features")
    return scales


def _to_latent(
    flow: CouplingFlow, x: Scales
) -> Tuple[Scales, Scales, List[Scales]]:
    """Returns latents, per-position logdet and the input of every block"""
    h = x
    logdet = [np.zeros(xs.shape[:2]) for xs in x]
    inputs: List[Scales] = []
    for block in flow.blocks:
        inputs.append(h)
        h, block_logdet = coupling_forward(block, h)
        logdet = [acc + ld for acc, ld in zip(logdet, block_logdet)]
    return h, logdet, inputs


def _base_logpdf(z: np.ndarray) -> np.ndarray:
    return -0.5 * (z.shape[-1] * _LOG_2PI + np.sum(z * z, axis=-1))


def log_density(flow: CouplingFlow, x: Sequence[np.ndarray]) -> LogDensityResult:
    """Exact log density of every sample by change of variables"""
    scales = _as_scales(flow, x)
    latent, logdet, _ = _to_latent(flow, scales)
    positions = [_base_logpdf(z) + ld for z, ld in zip(latent, logdet)]
    logp = sum(p.sum(axis=1) for p in positions)
    total_logdet = sum(ld.sum(axis=1) for ld in logdet)
    if not np.all(np.isfinite(logp)):
        raise NumericalError("log density is not finite")
    return LogDensityResult(
        np.asarray(logp), latent, np.asarray(total_logdet), positions
    )


def nll_loss(flow: CouplingFlow, batch: Sequence[np.ndarray]) -> float:
    """Mean negative log likelihood over the batch (constant term kept)"""
    scales = _as_scales(flow, batch)
    if scales[0].shape[0] == 0:
        raise ShapeError("nll_loss needs a non-empty batch")
    return float(-np.mean(log_density(flow, scales).logp))


def nll_loss_and_grad(
    flow: CouplingFlow, batch: Sequence[np.ndarray]
) -> Tuple[float, List[np.ndarray]]:
    """Loss and its gradient, aligned with ``flow.parameters()``"""
    scales = _as_scales(flow, batch)
    n = scales[0].shape[0]
    if n == 0:
        raise ShapeError("nll_loss needs a non-empty batch")
    latent, logdet, inputs = _to_latent(flow, scales)
    logp = sum(
        (_base_logpdf(z) + ld).sum(axis=1) for z, ld in zip(latent, logdet)
    )
    loss = float(-np.mean(logp))
    if not math.isfinite(loss):
        raise NumericalError("non-finite training loss")

    grad_h: Scales = [z / n for z in latent]
    grad_logdet = [np.full(ld.shape, -1.0 / n) for ld in logdet]
    per_block: List[List[np.ndarray]] = []
    for block, block_input in zip(reversed(flow.blocks), reversed(inputs)):
        grad_h, g_s, g_t = coupling_backward(block, block_input, grad_h, grad_logdet)
        per_block.append(g_s.parameters() + g_t.parameters())
    grads = [g for block_grads in reversed(per_block) for g in block_grads]
    return loss, grads


def to_latent(flow: CouplingFlow, x: Sequence[np.ndarray]) -> Scales:
    return _to_latent(flow, _as_scales(flow, x))[0]


def from_latent(flow: CouplingFlow, z: Sequence[np.ndarray]) -> Scales:
    """Generative direction: latents back to feature space"""
    h = _as_scales(flow, z)
    for block in reversed(flow.blocks):
        h = coupling_inverse(block, h)
    return h


def sample(
    flow: CouplingFlow, n: int, rng: RngStream, positions: Sequence[int] = (1,)
) -> Scales:
    """Draw ``n`` samples; ``positions`` gives P for every scale"""
    if len(positions) != flow.num_scales:
        raise ShapeError("one position count per scale is required")
    z = [np.asarray(rng.draw_normal((n, p, flow.dim))) for p in positions]
    return from_latent(flow, z)


def per_position_nll(flow: CouplingFlow, x: Sequence[np.ndarray]) -> Scales:
    """Negative log density per position and scale, (B, P) each"""
    return [-p for p in log_density(flow, x).logp_positions]


def image_score(
    flow: CouplingFlow,
    x: Sequence[np.ndarray],
    aggregation: Optional[Aggregation] = None,
) -> np.ndarray:
    """Per-sample score: mean (default) or max NLL per position per dimension"""
    aggregation = aggregation or flow.config.aggregation
    nll = np.concatenate(per_position_nll(flow, x), axis=1) / flow.dim
    if aggregation == "max":
        return nll.max(axis=1)
    if aggregation == "mean":
        return nll.mean(axis=1)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def latent_maps(
    latent: Scales, spatial: Sequence[Tuple[int, int]], index: int
) -> List[np.ndarray]:
    """(d, H, W) latent tensors of sample ``index``"""
    return [
        z[index].T.reshape(z.shape[-1], h, w) for z, (h, w) in zip(latent, spatial)
    ]


def localization_map(latents: Sequence[np.ndarray]) -> np.ndarray:
    """Channel L2 norm per position, coarse scales upsampled (nearest) and summed

    Args:
        latents: (C, H, W) tensors, finest scale first
    """
    if not latents:
        raise ShapeError("at least one latent tensor is required")
    norms = [
        np.sqrt(np.sum(np.asarray(z, dtype=np.float64) ** 2, axis=0)) for z in latents
    ]
    height, width = norms[0].shape
    total = np.zeros((height, width))
    for norm in norms:
        h, w = norm.shape
        rows = (np.arange(height) * h) // height
        cols = (np.arange(width) * w) // width
        total += norm[np.ix_(rows, cols)]
    return total


def likelihood_ratio_score(
    flow: CouplingFlow, background_flow: CouplingFlow, x: Sequence[np.ndarray]
) -> np.ndarray:
    """``log p_background(x) - log p_model(x)`` per sample"""
    if (flow.dim, flow.num_scales) != (background_flow.dim, background_flow.num_scales):
        raise ShapeError(
            f"model has {flow.num_scales}x{flow.dim} dimensions, "
            f"background {background_flow.num_scales}x{background_flow.dim}"
        )
    return log_density(background_flow, x).logp - log_density(flow, x).logp


def train_flow(
    flow: CouplingFlow,
    features: Sequence[np.ndarray],
    cfg: TrainConfig,
    eval_fn: Optional[EvalFn] = None,
) -> Tuple[CouplingFlow, List[EpochRecord]]:
    """Adam with global gradient-norm clipping on the mean NLL

    The input flow is left untouched; the trained copy is returned along with
    one history record per epoch (metrics every ``cfg.eval_every`` epochs).

    Raises:
        TrainingDivergedError: If a batch loss or gradient is not finite
    """
    scales = _as_scales(flow, features)
    n = scales[0].shape[0]
    if n == 0:
        raise ShapeError("training needs at least one sample")

    trained = flow.copy()
    optimizer = Adam(trained.parameters(), learning_rate=cfg.learning_rate)
    rng = seeded_rng(cfg.seed)
    history: List[EpochRecord] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.child(epoch).shuffled(list(range(n)))
        total = 0.0
        for step, start in enumerate(range(0, n, cfg.batch_size)):
            idx = np.asarray(order[start : start + cfg.batch_size])
            try:
                loss, grads = nll_loss_and_grad(trained, [xs[idx] for xs in scales])
            except NumericalError as e:
                raise TrainingDivergedError(e.message, epoch, step) from e
            if not all(np.all(np.isfinite(g)) for g in grads):
                raise TrainingDivergedError("non-finite gradient", epoch, step)
            clip_grad_norm(grads, cfg.grad_clip)
            optimizer.step(grads)
            total += loss * len(idx)

        record = EpochRecord(epoch=epoch, loss=total / n)
        if eval_fn is not None and epoch % cfg.eval_every == 0:
            record.metrics = eval_fn(trained)
            logger.info(
                "Flow epoch %d: loss %.4f",
                epoch,
                record.loss,
                extra={"epoch": epoch, "loss": record.loss, "metrics": record.metrics},
            )
        else:
            logger.debug("Flow epoch %d: loss %.4f", epoch, record.loss)
        history.append(record)
    return trained, history


def train_background_flow(
    features: Sequence[np.ndarray],
    flow_cfg: FlowConfig,
    train_cfg: TrainConfig,
    rng: RngStream,
) -> CouplingFlow:
    """Same architecture trained on noise-corrupted nominal features

    Noise std is ``flow_cfg.background_noise`` times the per-channel std of
    the training features.
    """
    scales = [np.asarray(xs, dtype=np.float64) for xs in features]
    dim = scales[0].shape[-1]
    noisy = []
    for i, xs in enumerate(scales):
        std = xs.reshape(-1, dim).std(axis=0)
        noise = np.asarray(rng.child(1, i).draw_normal(xs.shape))
        noisy.append(xs + flow_cfg.background_noise * std * noise)
    background = CouplingFlow.build(dim, len(scales), flow_cfg, rng.child(0))
    trained, _ = train_flow(background, noisy, train_cfg)
    return trained
