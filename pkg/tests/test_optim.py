import numpy as np
import pytest

import moltiers.autodiff as ad
from moltiers.optim import SGD, Adam


def make_param(values):
    return ad.parameter(np.array(values, dtype=np.float64))


def test_sgd_definition():
    w = make_param([[1.0]])
    w.grad = np.array([[1.0]])
    SGD([w], learning_rate=0.1).step()
    assert w.values[0, 0] == pytest.approx(0.9)


def test_sgd_updates_in_place_and_clears_grad():
    w = make_param([[2.0, -2.0]])
    buf = w.values
    w.grad = np.array([[1.0, -1.0]])
    SGD([w], learning_rate=0.5).step()
    assert w.values is buf
    assert np.array_equal(w.values, [[1.5, -1.5]])
    assert w.grad is None


def test_step_without_gradient_fails():
    w = make_param([[1.0]])
    opt = SGD([w], learning_rate=0.1)
    with pytest.raises(ad.GradientError):
        opt.step()


def test_adam_first_step_closed_form():
    # bias-corrected first step: w -= lr * g / (|g| + eps)
    lr, eps = 0.01, 1e-8
    g = np.array([[0.3, -2.0, 0.001]])
    w = make_param([[1.0, 1.0, 1.0]])
    w.grad = g.copy()
    Adam([w], learning_rate=lr).step()
    expected = 1.0 - lr * g / (np.abs(g) + eps)
    assert np.allclose(w.values, expected, atol=1e-12)


def test_adam_second_step_matches_reference():
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    grads = [np.array([[0.5]]), np.array([[-0.25]])]
    w = make_param([[0.0]])
    opt = Adam([w], learning_rate=lr)
    m = v = 0.0
    ref = 0.0
    for t, g in enumerate(grads, start=1):
        w.grad = g.copy()
        opt.step()
        m = b1 * m + (1 - b1) * g[0, 0]
        v = b2 * v + (1 - b2) * g[0, 0] ** 2
        ref -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    assert w.values[0, 0] == pytest.approx(ref, abs=1e-14)


def test_adam_state_is_per_parameter():
    a = make_param([[1.0]])
    b = make_param([[1.0]])
    opt = Adam([a, b], learning_rate=0.1)
    a.grad = np.array([[1.0]])
    b.grad = np.array([[-1.0]])
    opt.step()
    assert a.values[0, 0] < 1.0 < b.values[0, 0]


def test_optimizers_converge_on_quadratic():
    for opt_cls in (SGD, Adam):
        w = make_param([[5.0]])
        opt = opt_cls([w], learning_rate=0.1)
        for _ in range(200):
            loss = ad.reduce_sum(ad.mul(w, w))
            ad.backward(loss)
            opt.step()
        assert abs(w.values[0, 0]) < 1e-2, opt_cls.__name__
