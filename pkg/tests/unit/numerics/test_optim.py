"""Tests for gradient clipping, Adam and the finite-difference checker"""

import numpy as np
import pytest

from app.helpers.errors import NumericalError, ShapeError
from app.numerics import Adam, clip_grad_norm, global_norm, grad_check


def test_clip_grad_norm_scales_jointly():
    grads = [np.array([3.0, 0.0]), np.array([4.0])]
    before = clip_grad_norm(grads, 1.0)
    assert before == pytest.approx(5.0)
    assert global_norm(grads) == pytest.approx(1.0)
    np.testing.assert_allclose(grads[0], [0.6, 0.0])


def test_clip_grad_norm_leaves_small_gradients():
    grads = [np.array([0.1, 0.2])]
    clip_grad_norm(grads, 10.0)
    np.testing.assert_array_equal(grads[0], [0.1, 0.2])


def test_adam_minimizes_a_quadratic():
    x = np.array([5.0, -3.0])
    opt = Adam([x], learning_rate=0.1)
    for _ in range(500):
        opt.step([2.0 * x])
    np.testing.assert_allclose(x, 0.0, atol=1e-2)


def test_adam_rejects_wrong_gradient_count():
    opt = Adam([np.zeros(2)])
    with pytest.raises(ShapeError):
        opt.step([])


def test_grad_check_square():
    def f(x):
        return float(x @ x), 2.0 * x

    assert grad_check(f, np.array([3.0])) <= 1e-8


def test_grad_check_sum():
    def f(x):
        return float(np.sum(x)), np.ones_like(x)

    assert grad_check(f, np.linspace(-1, 1, 7)) <= 1e-10


def test_grad_check_reports_wrong_gradients():
    def f(x):
        return float(x @ x), x

    assert grad_check(f, np.array([2.0])) > 0.4


def test_grad_check_non_finite_raises():
    def f(x):
        return float(np.log(x[0])), 1.0 / x

    with pytest.raises(NumericalError):
        grad_check(f, np.array([0.0]))
