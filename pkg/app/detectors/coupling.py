"""Cross-scale affine coupling block

Inputs are lists with one array per scale, each shaped (B, P, d): B samples,
P spatial positions, d channels. A block permutes channels, keeps the first
half ``a`` and transforms the second half ``b``::

    y_b = b * exp(s(a, ctx)) + t(a, ctx),    s = clamp * tanh(s_raw / clamp)

``ctx`` is the concatenation of the position-mean of ``a`` over every *other*
scale, so the Jacobian stays triangular and ``log|det| = sum(s)`` per position.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.helpers.errors import NumericalError, ShapeError
from app.numerics.mlp import MlpParams, mlp_apply, mlp_grad

Scales = List[np.ndarray]


@dataclass
class CouplingBlock:
    """Channel permutation followed by one affine coupling"""

    permutation: np.ndarray
    conditioner_s: MlpParams
    conditioner_t: MlpParams
    clamp: float = 1.9
    cross_scale: bool = True
    num_scales: int = 1

    def __post_init__(self) -> None:
        self.permutation = np.asarray(self.permutation, dtype=np.int64)
        d = self.permutation.shape[0]
        if d < 2 or sorted(self.permutation.tolist()) != list(range(d)):
            raise ShapeError(
                f"permutation {self.permutation.tolist()} is not a bijection"
            )
        if self.clamp <= 0:
            raise ValueError("clamp must be positive")
        expected_in = conditioner_input_dim(d, self.num_scales, self.cross_scale)
        for name, cond in (("s", self.conditioner_s), ("t", self.conditioner_t)):
            if cond.in_dim != expected_in or cond.out_dim != d - d // 2:
                raise ShapeError(
                    f"conditioner_{name} maps {cond.in_dim}->{cond.out_dim}, "
                    f"expected {expected_in}->{d - d // 2}"
                )
        self.inverse_permutation = np.argsort(self.permutation)

    @property
    def dim(self) -> int:
        return int(self.permutation.shape[0])

    @property
    def split(self) -> int:
        return self.dim // 2

    def parameters(self) -> List[np.ndarray]:
        return self.conditioner_s.parameters() + self.conditioner_t.parameters()

    def copy(self) -> "CouplingBlock":
        return CouplingBlock(
            self.permutation.copy(),
            self.conditioner_s.copy(),
            self.conditioner_t.copy(),
            self.clamp,
            self.cross_scale,
            self.num_scales,
        )


def conditioner_input_dim(dim: int, num_scales: int, cross_scale: bool) -> int:
    half = dim // 2
    if cross_scale and num_scales > 1:
        return half * num_scales
    return half


def _check_inputs(block: CouplingBlock, z: Sequence[np.ndarray]) -> None:
    if len(z) != block.num_scales:
        raise ShapeError(f"block expects {block.num_scales} scales, got {len(z)}")
    for i, zs in enumerate(z):
        if zs.ndim != 3 or zs.shape[-1] != block.dim:
            raise ShapeError(
                f"scale {i}: expected (B, P, {block.dim}), got {tuple(zs.shape)}"
            )


def _contexts(
    block: CouplingBlock, halves: Sequence[np.ndarray]
) -> List[Optional[np.ndarray]]:
    """Per scale: (B, (S-1)*d1) means of the kept halves of the other scales"""
    if not block.cross_scale or len(halves) < 2:
        return [None] * len(halves)
    means = [a.mean(axis=1) for a in halves]
    return [
        np.concatenate([means[r] for r in range(len(halves)) if r != s], axis=-1)
        for s in range(len(halves))
    ]


def _conditioner_input(a: np.ndarray, ctx: Optional[np.ndarray]) -> np.ndarray:
    if ctx is None:
        return a
    tiled = np.broadcast_to(ctx[:, None, :], (a.shape[0], a.shape[1], ctx.shape[-1]))
    return np.concatenate([a, tiled], axis=-1)


def _scale_shift(
    block: CouplingBlock, h: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s_raw = mlp_apply(block.conditioner_s, h)
    t = mlp_apply(block.conditioner_t, h)
    if not (np.all(np.isfinite(s_raw)) and np.all(np.isfinite(t))):
        raise NumericalError("conditioner produced non-finite scale or shift")
    s = block.clamp * np.tanh(s_raw / block.clamp)
    return s_raw, s, t


def coupling_forward(
    block: CouplingBlock, z: Sequence[np.ndarray]
) -> Tuple[Scales, Scales]:
    """Apply the block; returns (y per scale, logdet per scale shaped (B, P))"""
    _check_inputs(block, z)
    d1 = block.split
    permuted = [zs[..., block.permutation] for zs in z]
    halves = [v[..., :d1] for v in permuted]
    contexts = _contexts(block, halves)

    ys, logdets = [], []
    for v, a, ctx in zip(permuted, halves, contexts):
        _, s, t = _scale_shift(block, _conditioner_input(a, ctx))
        y_b = v[..., d1:] * np.exp(s) + t
        ys.append(np.concatenate([a, y_b], axis=-1))
        logdets.append(s.sum(axis=-1))
    return ys, logdets


def coupling_inverse(block: CouplingBlock, y: Sequence[np.ndarray]) -> Scales:
    """Exact algebraic inverse of coupling_forward"""
    _check_inputs(block, y)
    d1 = block.split
    halves = [ys[..., :d1] for ys in y]
    contexts = _contexts(block, halves)

    zs = []
    for ys, a, ctx in zip(y, halves, contexts):
        _, s, t = _scale_shift(block, _conditioner_input(a, ctx))
        b = (ys[..., d1:] - t) * np.exp(-s)
        if not np.all(np.isfinite(b)):
            raise NumericalError("non-finite value while inverting a coupling block")
        v = np.concatenate([a, b], axis=-1)
        zs.append(v[..., block.inverse_permutation])
    return zs


def coupling_backward(
    block: CouplingBlock,
    z: Sequence[np.ndarray],
    grad_y: Sequence[np.ndarray],
    grad_logdet: Sequence[np.ndarray],
) -> Tuple[Scales, MlpParams, MlpParams]:
    """Reverse mode through one block

    Args:
        z: Block inputs, as passed to coupling_forward
        grad_y: dL/dy per scale, (B, P, d)
        grad_logdet: dL/dlogdet per scale, (B, P)

    Returns:
        dL/dz per scale and the gradients of both conditioners
    """
    _check_inputs(block, z)
    d1 = block.split
    permuted = [zs[..., block.permutation] for zs in z]
    halves = [v[..., :d1] for v in permuted]
    contexts = _contexts(block, halves)
    others = [[r for r in range(len(z)) if r != s] for s in range(len(z))]

    grads_s = block.conditioner_s.zeros_like()
    grads_t = block.conditioner_t.zeros_like()
    grad_a: Scales = []
    grad_b: Scales = []
    grad_means = [np.zeros((zs.shape[0], d1)) for zs in z]

    for s_idx, (v, a, ctx) in enumerate(zip(permuted, halves, contexts)):
        h = _conditioner_input(a, ctx)
        s_raw, s, _ = _scale_shift(block, h)
        scale = np.exp(s)
        g_yb = grad_y[s_idx][..., d1:]

        g_s = g_yb * v[..., d1:] * scale + grad_logdet[s_idx][..., None]
        g_s_raw = g_s * (1.0 - np.tanh(s_raw / block.clamp) ** 2)
        p_s, h_grad_s = mlp_grad(block.conditioner_s, h, g_s_raw)
        p_t, h_grad_t = mlp_grad(block.conditioner_t, h, g_yb)
        for acc, g in zip(grads_s.parameters(), p_s.parameters()):
            acc += g
        for acc, g in zip(grads_t.parameters(), p_t.parameters()):
            acc += g

        h_grad = h_grad_s + h_grad_t
        grad_a.append(grad_y[s_idx][..., :d1] + h_grad[..., :d1])
        grad_b.append(g_yb * scale)
        if ctx is not None:
            ctx_grad = h_grad[..., d1:].sum(axis=1)
            for j, r in enumerate(others[s_idx]):
                grad_means[r] += ctx_grad[:, j * d1 : (j + 1) * d1]

    grad_z = []
    for s_idx, zs in enumerate(z):
        ga = grad_a[s_idx] + grad_means[s_idx][:, None, :] / zs.shape[1]
        gv = np.concatenate([ga, grad_b[s_idx]], axis=-1)
        grad_z.append(gv[..., block.inverse_permutation])
    return grad_z, grads_s, grads_t
