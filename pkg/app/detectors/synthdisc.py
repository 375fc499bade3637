"""Feature adaptor + per-position discriminator trained on synthesized anomalies

Every training sample contributes three branches: the nominal features
(target 0 everywhere), a locally synthesized copy (target = its anomaly mask)
and a globally perturbed copy in adapted space (target 1 everywhere).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from app.helpers.errors import (
    InputValidationError,
    NumericalError,
    ShapeError,
    TrainingDivergedError,
)
from app.helpers.schemas import (
    DiscriminatorConfig,
    EpochRecord,
    OodHypothesis,
    SynthGlobalConfig,
    SynthLocalConfig,
)
from app.numerics.mlp import Activation, MlpParams, mlp_apply, mlp_grad
from app.numerics.optim import Adam, clip_grad_norm
from app.numerics.rng import RngStream

from .synthesis import synth_local

logger = logging.getLogger(__name__)

_PROB_EPS = 1e-12


class Branch(str, Enum):
    """Training branch and its target map"""

    NOMINAL = "nominal"
    LOCAL = "local"
    GLOBAL = "global"


@dataclass
class OodCriterion:
    """Distance telling when a perturbed vector has left the nominal data"""

    kind: OodHypothesis
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    store: Optional[np.ndarray] = None
    neighbors: int = 1
    # ood_score above which a vector counts as outside the nominal region
    margin: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == OodHypothesis.HYPERSPHERE:
            if self.center is None or self.radius < 0:
                raise InputValidationError("hypersphere needs a center and radius >= 0")
        elif self.kind == OodHypothesis.MANIFOLD:
            if self.store is None or len(self.store) == 0:
                raise InputValidationError("manifold criterion has no stored vectors")
            if not 1 <= self.neighbors <= len(self.store):
                raise InputValidationError(
                    f"k={self.neighbors} must be in [1, {len(self.store)}]"
                )
        else:
            raise InputValidationError("criterion kind must be hypersphere or manifold")

    def outside(self, vectors: np.ndarray) -> bool:
        return float(np.mean(ood_score(self, vectors))) > self.margin

    @property
    def dim(self) -> int:
        ref = self.center if self.kind == OodHypothesis.HYPERSPHERE else self.store
        assert ref is not None
        return int(np.shape(ref)[-1])


@dataclass
class AdaptorDiscriminator:
    """Adaptor (d -> d, linear) followed by a discriminator (d -> 1 logit)"""

    adaptor: MlpParams
    discriminator: MlpParams
    config: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    criterion: Optional[OodCriterion] = None

    def __post_init__(self) -> None:
        if self.adaptor.in_dim != self.adaptor.out_dim:
            raise ShapeError("the adaptor must preserve the feature dimension")
        if self.discriminator.in_dim != self.adaptor.out_dim:
            raise ShapeError("discriminator input must match the adaptor output")
        if self.discriminator.out_dim != 1:
            raise ShapeError("the discriminator emits one logit per position")

    @classmethod
    def build(
        cls, dim: int, cfg: DiscriminatorConfig, rng: RngStream
    ) -> "AdaptorDiscriminator":
        discriminator = MlpParams.initialize(
            [dim, cfg.hidden_units, 1],
            [Activation.RELU, Activation.IDENTITY],
            rng,
            output_scale=cfg.init_scale,
        )
        return cls(MlpParams.identity(dim), discriminator, cfg)

    @property
    def dim(self) -> int:
        return self.adaptor.in_dim

    def parameters(self) -> List[np.ndarray]:
        return self.adaptor.parameters() + self.discriminator.parameters()

    def copy(self) -> "AdaptorDiscriminator":
        return AdaptorDiscriminator(
            self.adaptor.copy(), self.discriminator.copy(), self.config, self.criterion
        )


def adapt(model: AdaptorDiscriminator, features: np.ndarray) -> np.ndarray:
    """Apply the adaptor at every position (last axis = channels)"""
    return mlp_apply(model.adaptor, features)


def _logits(model: AdaptorDiscriminator, adapted: np.ndarray) -> np.ndarray:
    return mlp_apply(model.discriminator, adapted)[..., 0]


def discriminate(
    model: AdaptorDiscriminator,
    adapted: np.ndarray,
    features: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-position anomaly probability

    With ``config.background_logit`` set, positions whose raw ``features`` are
    exactly zero (blacked-out background) get that fixed logit instead. A zero
    probability on masked background comes from this pin
    (``BLANK_FEATURE_LOGIT``). Without it, zero vectors get whatever probability
    the learned biases give them.
    """
    logits = _logits(model, adapted)
    pinned = model.config.background_logit
    if pinned is not None and features is not None:
        blank = ~np.any(np.asarray(features) != 0, axis=-1)
        logits = np.where(blank, pinned, logits)
    return expit(logits)


def bce(probabilities: np.ndarray, targets: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(probabilities, dtype=np.float64), _PROB_EPS, 1 - _PROB_EPS)
    t = np.asarray(targets, dtype=np.float64)
    return -(t * np.log(p) + (1 - t) * np.log1p(-p))


def _bce_with_logits(
    logits: np.ndarray, targets: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Mean BCE and its gradient wrt the logits"""
    loss = np.logaddexp(0.0, logits) - targets * logits
    grad = (expit(logits) - targets) / logits.size
    return float(loss.mean()), grad


def branch_targets(
    shape: Tuple[int, ...], branch: Branch, local_mask: Optional[np.ndarray] = None
) -> np.ndarray:
    branch = Branch(branch)
    if branch == Branch.LOCAL:
        if local_mask is None:
            raise InputValidationError("the local branch needs its anomaly mask")
        mask = np.asarray(local_mask, dtype=np.float64)
        if mask.shape != tuple(shape):
            raise ShapeError(f"mask {mask.shape} does not match predictions {shape}")
        return mask
    return np.full(shape, 1.0 if branch == Branch.GLOBAL else 0.0)


def three_branch_loss(
    predictions: np.ndarray,
    branch: Branch,
    local_mask: Optional[np.ndarray] = None,
) -> float:
    """Mean binary cross-entropy against the branch's target map"""
    p = np.asarray(predictions, dtype=np.float64)
    return float(bce(p, branch_targets(p.shape, branch, local_mask)).mean())


def nominal_loss_and_grad(
    model: AdaptorDiscriminator, adapted: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Nominal-branch loss of adapted vectors and its gradient wrt them"""
    logits = _logits(model, adapted)
    loss, g_logits = _bce_with_logits(logits, np.zeros_like(logits))
    _, g_adapted = mlp_grad(model.discriminator, adapted, g_logits[..., None])
    return loss, g_adapted


def fit_criterion(
    adapted: np.ndarray,
    kind: OodHypothesis,
    neighbors: int = 1,
    store_size: Optional[int] = None,
    rng: Optional[RngStream] = None,
) -> Optional[OodCriterion]:
    """Hypersphere (mean center, max radius) or manifold (stored vectors)

    The manifold margin is the largest leave-one-out k-NN distance of the
    store, so a vector counts as outside once it is farther from the nominal
    data than any stored vector is from its neighbors.
    """
    kind = OodHypothesis(kind)
    if kind == OodHypothesis.NONE:
        return None
    vectors = np.asarray(adapted, dtype=np.float64).reshape(-1, np.shape(adapted)[-1])
    if len(vectors) == 0:
        raise InputValidationError("no nominal vectors to fit a criterion on")
    if kind == OodHypothesis.HYPERSPHERE:
        center = vectors.mean(axis=0)
        radius = float(np.max(np.linalg.norm(vectors - center, axis=1)))
        return OodCriterion(kind, center=center, radius=radius)
    if store_size is not None and len(vectors) > store_size:
        if rng is None:
            raise InputValidationError("subsampling the manifold store needs an rng")
        keep = np.sort(rng.generator.choice(len(vectors), store_size, replace=False))
        vectors = vectors[keep]
    k = min(neighbors, len(vectors))
    margin = _manifold_margin(vectors, k)
    return OodCriterion(kind, store=vectors, neighbors=k, margin=margin)


def _manifold_margin(store: np.ndarray, k: int) -> float:
    """Largest leave-one-out k-NN distance among the stored vectors"""
    if len(store) <= k:
        return 0.0
    distances = cdist(store, store)
    np.fill_diagonal(distances, np.inf)
    nearest = np.partition(distances, k - 1, axis=1)[:, :k]
    return float(nearest.mean(axis=1).max())


def ood_score(criterion: OodCriterion, vectors: np.ndarray) -> np.ndarray:
    """Distance of every vector from the nominal region

    hypersphere: ``||f - center|| - radius``; manifold: mean distance to the
    ``k`` nearest stored nominal vectors.
    """
    f = np.asarray(vectors, dtype=np.float64)
    if f.shape[-1] != criterion.dim:
        raise ShapeError(f"vectors have dim {f.shape[-1]}, criterion {criterion.dim}")
    flat = f.reshape(-1, f.shape[-1])
    if criterion.kind == OodHypothesis.HYPERSPHERE:
        scores = np.linalg.norm(flat - criterion.center, axis=1) - criterion.radius
    else:
        assert criterion.store is not None
        distances = cdist(flat, criterion.store)
        k = criterion.neighbors
        nearest = np.partition(distances, k - 1, axis=1)[:, :k]
        scores = nearest.mean(axis=1)
    return scores.reshape(f.shape[:-1])


def position_loss_grad(model: AdaptorDiscriminator, adapted: np.ndarray) -> np.ndarray:
    """Gradient of each position's own nominal-branch BCE wrt its vector"""
    logits = _logits(model, adapted)
    # d/dl of softplus(l) with target 0
    _, g_adapted = mlp_grad(model.discriminator, adapted, expit(logits)[..., None])
    return g_adapted


def synth_global(
    model: AdaptorDiscriminator,
    adapted: np.ndarray,
    cfg: SynthGlobalConfig,
    rng: RngStream,
    criterion: Optional[OodCriterion] = None,
) -> np.ndarray:
    """Noisy, truncated gradient ascent on the nominal-branch loss

    ``x <- x + clip(eta * (g + eps), -delta, delta)`` for ``cfg.steps`` steps,
    where ``g`` is the gradient of each position's own loss. With
    ``cfg.normalize_gradient`` it is scaled to unit length per position first.
    With a criterion the ascent stops once the mean OOD score exceeds its margin.
    """
    x = np.array(adapted, dtype=np.float64)
    scale = float(x.std()) if cfg.relative_to_feature_std else 1.0
    if scale <= 0:
        scale = 1.0
    delta = cfg.truncation * scale
    sigma = cfg.noise_std * scale

    for step in range(cfg.steps):
        if criterion is not None and criterion.outside(x):
            logger.debug("Global synthesis left the nominal region at step %d", step)
            break
        grad = position_loss_grad(model, x)
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient in global synthesis step {step}")
        if cfg.normalize_gradient:
            norms = np.linalg.norm(grad, axis=-1, keepdims=True)
            grad = grad / np.where(norms > 0, norms, 1.0)
        noise = np.zeros_like(x)
        if sigma > 0:
            noise = np.asarray(rng.child(step).draw_normal(x.shape, 0.0, sigma))
        x = x + np.clip(cfg.step_size * (grad + noise), -delta, delta)
    return x


def disc_score(
    model: AdaptorDiscriminator, features: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Image score (max probability) and the (H, W) probability map

    Args:
        features: (C, H, W) feature tensor
    """
    tensor = np.asarray(features, dtype=np.float64)
    if tensor.ndim != 3:
        raise ShapeError(f"expected (C, H, W) features, got {tensor.shape}")
    grid = np.moveaxis(tensor, 0, -1)
    probabilities = discriminate(model, adapt(model, grid), grid)
    return float(probabilities.max()), probabilities


def _branch_grads(
    model: AdaptorDiscriminator,
    x: np.ndarray,
    adapted: np.ndarray,
    targets: np.ndarray,
) -> Tuple[float, List[np.ndarray]]:
    """Loss of one branch and gradients for adaptor + discriminator

    ``adapted`` equals ``adapt(model, x)`` plus a constant offset, so the
    adaptor gradient is taken at ``x``.
    """
    logits = _logits(model, adapted)
    loss, g_logits = _bce_with_logits(logits, targets)
    g_disc, g_adapted = mlp_grad(model.discriminator, adapted, g_logits[..., None])
    g_adaptor, _ = mlp_grad(model.adaptor, x, g_adapted)
    return loss, g_adaptor.parameters() + g_disc.parameters()


def train_discriminator(
    model: AdaptorDiscriminator,
    features: np.ndarray,
    fg_masks: np.ndarray,
    local_cfg: SynthLocalConfig,
    global_cfg: SynthGlobalConfig,
    epochs: int,
    rng: RngStream,
) -> Tuple[AdaptorDiscriminator, List[EpochRecord]]:
    """Train on nominal, local and global branches; returns a trained copy

    Args:
        features: (N, H, W, C) nominal feature grids
        fg_masks: (N, H, W) foreground at feature resolution
    """
    grids = np.asarray(features, dtype=np.float64)
    masks = np.asarray(fg_masks, dtype=bool)
    if grids.ndim != 4 or grids.shape[0] == 0:
        raise ShapeError("expected a non-empty (N, H, W, C) batch of feature grids")
    if masks.shape != grids.shape[:3]:
        raise ShapeError(f"masks {masks.shape} do not match features {grids.shape[:3]}")
    if grids.shape[-1] != model.dim:
        raise ShapeError(f"features have {grids.shape[-1]} channels, model {model.dim}")

    cfg = model.config
    trained = model.copy()
    optimizer = Adam(trained.parameters(), learning_rate=cfg.learning_rate)
    n = grids.shape[0]
    history: List[EpochRecord] = []

    for epoch in range(1, epochs + 1):
        epoch_rng = rng.child(epoch)
        trained.criterion = fit_criterion(
            adapt(trained, grids),
            cfg.hypothesis,
            cfg.neighbors,
            cfg.manifold_store_size,
            epoch_rng.child(0),
        )
        order = epoch_rng.child(1).shuffled(list(range(n)))
        total = 0.0
        for step, start in enumerate(range(0, n, cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            grads = [np.zeros_like(p) for p in trained.parameters()]
            batch_loss = 0.0
            for i in batch:
                sample_rng = epoch_rng.child(2, i)
                x = grids[i]
                adapted = adapt(trained, x)

                loss_n, g_n = _branch_grads(trained, x, adapted, np.zeros(x.shape[:2]))

                x_local, local_mask = synth_local(
                    x, masks[i], local_cfg, sample_rng.child(0)
                )
                loss_l, g_l = _branch_grads(
                    trained,
                    x_local,
                    adapt(trained, x_local),
                    local_mask.astype(np.float64),
                )

                perturbed = synth_global(
                    trained, adapted, global_cfg, sample_rng.child(1), trained.criterion
                )
                loss_g, g_g = _branch_grads(trained, x, perturbed, np.ones(x.shape[:2]))

                batch_loss += loss_n + loss_l + loss_g
                for acc, a, b, c in zip(grads, g_n, g_l, g_g):
                    acc += (a + b + c) / len(batch)

            finite = all(np.all(np.isfinite(g)) for g in grads)
            if not (math.isfinite(batch_loss) and finite):
                raise TrainingDivergedError(
                    "non-finite discriminator loss", epoch, step
                )
            clip_grad_norm(grads, cfg.grad_clip)
            optimizer.step(grads)
            total += batch_loss

        record = EpochRecord(epoch=epoch, loss=total / n)
        logger.debug(
            "Discriminator epoch %d: loss %.4f",
            epoch,
            record.loss,
            extra={"epoch": epoch, "loss": record.loss},
        )
        history.append(record)
    return trained, history
