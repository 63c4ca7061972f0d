"""Backward-pass verification against finite differences and hand formulas.

These are the tests that earn trust in the analytic BPTT: central finite
differences are computed from forward passes only, and a one-step network is
small enough to differentiate by hand.
"""

import numpy as np
import numpy.testing as npt
import pytest

from aquaprobe.lstm import (
    PARAM_FIELDS,
    input_gradients,
    param_gradients,
    predict_batch,
)
from aquaprobe.numerics import sigmoid

from helpers import (
    fd_input_gradients,
    fd_param_gradients,
    gradients_close,
    rand_params,
    zero_params,
)


def _random_case(seed):
    gen = np.random.default_rng(seed)
    hidden = int(gen.integers(2, 9))
    seq = int(gen.integers(2, 13))
    n = int(gen.integers(1, 4))
    params = rand_params(seed, hidden, 2)
    X = gen.uniform(0, 1, (n, seq, 2))
    y = gen.uniform(0, 1, n)
    return params, X, y


@pytest.mark.parametrize("seed", range(5))
def test_param_gradients_match_finite_differences(seed):
    params, X, y = _random_case(seed)
    analytic = param_gradients(params, X, y)
    numeric = fd_param_gradients(params, X, y)
    for name in PARAM_FIELDS:
        assert gradients_close(getattr(analytic, name), numeric[name]), name


@pytest.mark.parametrize("seed", range(5, 10))
def test_input_gradients_match_finite_differences(seed):
    params, X, y = _random_case(seed)
    analytic = input_gradients(params, X, y)
    numeric = fd_input_gradients(params, X, y)
    assert gradients_close(analytic, numeric)


def test_zero_loss_batch_has_zero_gradients():
    # with all weights zero the output is exactly b_dense, so matching
    # targets make the loss (and every gradient) vanish
    params = zero_params(hidden=4, features=2, b_dense=0.6)
    X = np.random.default_rng(4).uniform(0, 1, (3, 7, 2))
    y = np.full(3, 0.6)
    grads = param_gradients(params, X, y)
    for name in PARAM_FIELDS[:9]:
        npt.assert_array_equal(getattr(grads, name), np.zeros_like(getattr(grads, name)))
    assert grads.b_dense == 0.0
    npt.assert_array_equal(input_gradients(params, X, y), np.zeros_like(X))


def test_duplicated_batch_keeps_mean_gradient():
    params, X, y = _random_case(11)
    once = param_gradients(params, X, y)
    twice = param_gradients(params, np.concatenate([X, X]), np.concatenate([y, y]))
    for name in PARAM_FIELDS:
        npt.assert_allclose(getattr(once, name), getattr(twice, name), rtol=1e-12, atol=1e-15)


def test_zero_network_has_zero_input_gradients():
    params = zero_params(hidden=3, features=2)
    X = np.random.default_rng(5).uniform(0, 1, (9, 2))
    npt.assert_array_equal(input_gradients(params, X, 0.3), np.zeros((9, 2)))


def test_input_gradient_linear_in_residual():
    # the backward pass is linear in (pred - y): doubling the residual
    # doubles every input gradient
    params, X, y = _random_case(12)
    preds = predict_batch(params, X)
    y1 = preds - 0.1
    y2 = preds - 0.2
    g1 = input_gradients(params, X, y1)
    g2 = input_gradients(params, X, y2)
    npt.assert_allclose(g2, 2.0 * g1, rtol=1e-12, atol=1e-15)


def test_single_window_and_batch_agree():
    params, X, y = _random_case(13)
    batch = input_gradients(params, X, y)
    for i in range(X.shape[0]):
        npt.assert_allclose(input_gradients(params, X[i], y[i]), batch[i], rtol=0, atol=1e-15)


def test_one_step_chain_rule_by_hand():
    # sequence_length 1, h0 = c0 = 0: the whole network is one cell and the
    # gradient separates into three gate paths (the forget path dies with c0)
    hidden, features = 3, 2
    params = rand_params(77, hidden, features)
    x = np.random.default_rng(6).uniform(0, 1, features)
    y = 0.4

    wx_f, wx_i, wx_c, wx_o = (getattr(params, n)[:, hidden:] for n in ("w_f", "w_i", "w_c", "w_o"))
    f = sigmoid(wx_f @ x + params.b_f)
    i = sigmoid(wx_i @ x + params.b_i)
    g = np.tanh(wx_c @ x + params.b_c)
    o = sigmoid(wx_o @ x + params.b_o)
    c1 = i * g
    tc = np.tanh(c1)
    pred = float((params.w_dense @ (o * tc))[0] + params.b_dense)

    dpred = 2.0 * (pred - y)
    dh = dpred * params.w_dense.ravel()
    dzo = dh * tc * o * (1.0 - o)
    dc = dh * o * (1.0 - tc**2)
    dzi = dc * g * i * (1.0 - i)
    dzg = dc * i * (1.0 - g**2)
    dx_hand = wx_i.T @ dzi + wx_c.T @ dzg + wx_o.T @ dzo

    dx = input_gradients(params, x[None, :], y)
    npt.assert_allclose(dx.ravel(), dx_hand, rtol=1e-12, atol=1e-15)
    assert f.shape == (hidden,)  # forget gate exists but cannot reach the loss
