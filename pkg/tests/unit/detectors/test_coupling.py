"""Tests for the cross-scale affine coupling block"""

import math

import numpy as np
import pytest

from app.detectors.coupling import (
    CouplingBlock,
    conditioner_input_dim,
    coupling_forward,
    coupling_inverse,
)
from app.detectors.flow import CouplingFlow, from_latent, to_latent
from app.helpers.errors import ShapeError
from app.helpers.schemas import FlowConfig
from app.numerics import MlpParams, numerical_gradient, seeded_rng

CLAMP = 1.9


def constant_block(
    permutation, s_value: float = 0.0, num_scales: int = 1, cross_scale: bool = False
) -> CouplingBlock:
    """Block whose conditioners ignore their input"""
    d = len(permutation)
    out = d - d // 2
    raw = CLAMP * math.atanh(s_value / CLAMP)
    in_dim = conditioner_input_dim(d, num_scales, cross_scale)
    return CouplingBlock(
        np.asarray(permutation),
        MlpParams.constant(in_dim, np.full(out, raw)),
        MlpParams.constant(in_dim, np.zeros(out)),
        clamp=CLAMP,
        cross_scale=cross_scale,
        num_scales=num_scales,
    )


def random_block(dim: int, num_scales: int, seed: int) -> CouplingBlock:
    cfg = FlowConfig(num_blocks=1, hidden_units=8, init_scale=0.5)
    return CouplingFlow.build(dim, num_scales, cfg, seeded_rng(seed)).blocks[0]


def test_zero_conditioners_are_identity():
    block = constant_block(range(4))
    z = [seeded_rng(0).draw_normal((2, 3, 4))]
    (y,), (logdet,) = coupling_forward(block, z)
    np.testing.assert_array_equal(y, z[0])
    assert not np.any(logdet)


def test_constant_log_two_scale_sums_over_transformed_half():
    block = constant_block(range(6), s_value=math.log(2.0))
    z = [seeded_rng(1).draw_normal((1, 1, 6))]
    (y,), (logdet,) = coupling_forward(block, z)
    assert logdet[0, 0] == pytest.approx(3 * math.log(2.0), abs=1e-12)
    np.testing.assert_allclose(y[..., 3:], 2.0 * z[0][..., 3:])


def test_clamp_bounds_the_scale():
    block = random_block(4, 1, 0)
    for layer in block.conditioner_s.layers:
        layer.weight *= 1e3
    z = [seeded_rng(2).draw_normal((5, 7, 4)) * 10]
    _, (logdet,) = coupling_forward(block, z)
    assert np.all(np.abs(logdet) <= 2 * CLAMP + 1e-12)


def jacobian(f, x: np.ndarray) -> np.ndarray:
    columns = []
    for i in range(x.size):
        def component(point, i=i):
            return float(f(point)[i])

        columns.append(numerical_gradient(component, x))
    return np.stack(columns)


def test_logdet_matches_numerical_jacobian_single_scale():
    block = random_block(6, 1, 3)
    x = seeded_rng(4).draw_normal(6)

    def forward(v):
        return coupling_forward(block, [v.reshape(1, 1, 6)])[0][0].reshape(-1)

    _, (logdet,) = coupling_forward(block, [x.reshape(1, 1, 6)])
    _, log_abs_det = np.linalg.slogdet(jacobian(forward, x))
    assert logdet[0, 0] == pytest.approx(log_abs_det, abs=1e-6)


def test_logdet_matches_numerical_jacobian_across_scales():
    """Cross-scale context keeps the joint Jacobian triangular"""
    block = random_block(4, 2, 5)
    shapes = [(1, 2, 4), (1, 1, 4)]
    sizes = [int(np.prod(s)) for s in shapes]
    x = seeded_rng(6).draw_normal(sum(sizes))

    def unpack(v):
        return [v[: sizes[0]].reshape(shapes[0]), v[sizes[0] :].reshape(shapes[1])]

    def forward(v):
        ys, _ = coupling_forward(block, unpack(v))
        return np.concatenate([y.reshape(-1) for y in ys])

    _, logdets = coupling_forward(block, unpack(x))
    total = sum(float(ld.sum()) for ld in logdets)
    _, log_abs_det = np.linalg.slogdet(jacobian(forward, x))
    assert total == pytest.approx(log_abs_det, abs=1e-6)


def test_identity_block_inverse():
    block = constant_block(range(4))
    y = [seeded_rng(7).draw_normal((3, 2, 4))]
    np.testing.assert_array_equal(coupling_inverse(block, y)[0], y[0])


def test_permutation_only_block_inverse_unpermutes():
    permutation = [2, 0, 3, 1]
    block = constant_block(permutation)
    z = [seeded_rng(8).draw_normal((1, 1, 4))]
    (y,), _ = coupling_forward(block, z)
    np.testing.assert_array_equal(y, z[0][..., permutation])
    np.testing.assert_array_equal(coupling_inverse(block, [y])[0], z[0])


def test_four_block_round_trip():
    cfg = FlowConfig(num_blocks=4, hidden_units=16, init_scale=0.5)
    flow = CouplingFlow.build(6, 3, cfg, seeded_rng(9))
    rng = seeded_rng(10)
    x = [rng.child(i).draw_normal((100, p, 6)) for i, p in enumerate((4, 2, 1))]
    restored = from_latent(flow, to_latent(flow, x))
    for a, b in zip(restored, x):
        assert np.max(np.abs(a - b)) <= 1e-9


def test_non_bijective_permutation_is_rejected():
    with pytest.raises(ShapeError):
        constant_block([0, 0, 1, 2])


def test_scale_count_mismatch():
    block = random_block(4, 2, 0)
    with pytest.raises(ShapeError):
        coupling_forward(block, [np.zeros((1, 1, 4))])
