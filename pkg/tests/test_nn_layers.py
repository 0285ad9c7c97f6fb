"""Layer-level unit tests: forward fixtures plus finite-difference oracles."""

from __future__ import annotations

import numpy as np
import pytest

from tapeworld import nn
from tapeworld.errors import ContractViolation
from tapeworld.nn.gradcheck import check_gradients


def rng64(seed=0):
    return np.random.default_rng(seed)


def run_loss(model, x, dy_seed=7, train=True):
    """Forward + squared-projection loss + backward; returns loss closure.

    The loss is sum(y * r) with a fixed random projection r, so every output
    element contributes to the scalar being differentiated.
    """
    r = np.random.default_rng(dy_seed)

    def loss_only():
        y, _ = model.forward(x, train)
        return float((y * proj).sum())

    y, cache = model.forward(x, train)
    proj = r.standard_normal(y.shape)
    nn.zero_grads(model.params())
    model.backward(proj, cache)
    return loss_only


# ---------------------------------------------------------------- forward

def test_dense_identity_passthrough():
    rng = rng64()
    layer = nn.Dense(4, 4, rng, dtype=np.float64)
    layer.W.value[...] = np.eye(4)
    layer.b.value[...] = 0.0
    x = rng.standard_normal((3, 4))
    y, _ = layer.forward(x, train=True)
    np.testing.assert_allclose(y, x)


def test_relu_fixture():
    y, _ = nn.ReLU().forward(np.array([[-1.0, 0.0, 2.0]]), train=True)
    np.testing.assert_array_equal(y, [[0.0, 0.0, 2.0]])


def test_maxpool2d_fixture():
    x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 2, 2, 1)
    y, _ = nn.MaxPool2d().forward(x, train=True)
    assert y.shape == (1, 1, 1, 1)
    assert y[0, 0, 0, 0] == 4.0


def test_dense_shape_mismatch_names_layer():
    layer = nn.Dense(4, 2, rng64())
    with pytest.raises(ContractViolation, match="dense"):
        layer.forward(np.zeros((3, 5)), train=True)


def test_forward_purity():
    rng = rng64(3)
    model = nn.Sequential([
        ("conv", nn.Conv2d(3, 4, rng, dtype=np.float64)),
        ("bn", nn.BatchNorm(4, dtype=np.float64)),
        ("relu", nn.ReLU()),
    ])
    x = rng.standard_normal((2, 8, 8, 3))
    y1, _ = model.forward(x, train=True)
    y2, _ = model.forward(x, train=True)
    np.testing.assert_array_equal(y1, y2)


def test_batchnorm_eval_batch_size_independent():
    rng = rng64(4)
    bn = nn.BatchNorm(5, dtype=np.float64)
    x = rng.standard_normal((16, 5))
    bn.forward(x, train=True)  # populate running stats
    y_full, _ = bn.forward(x, train=False)
    y_one, _ = bn.forward(x[:1], train=False)
    np.testing.assert_allclose(y_full[:1], y_one)


def test_l2_normalize_unit_norm():
    rng = rng64(5)
    x = rng.standard_normal((6, 9))
    y, _ = nn.L2Normalize().forward(x, train=True)
    np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-5)


# --------------------------------------------------------------- gradients

def conv2d_stride1():
    return nn.Conv2d(3, 4, rng64(10), dtype=np.float64), (2, 6, 6, 3)


def conv2d_stride2():
    return nn.Conv2d(3, 4, rng64(11), stride=2, dtype=np.float64), (2, 8, 8, 3)


def conv1d_case():
    return nn.Conv1d(5, 6, rng64(12), dtype=np.float64), (2, 16, 5)


def dense_case():
    return nn.Dense(7, 4, rng64(13), dtype=np.float64), (5, 7)


def bn_case():
    return nn.BatchNorm(4, dtype=np.float64), (6, 3, 3, 4)


def pool2d_case():
    return nn.MaxPool2d(), (2, 4, 4, 3)


def pool1d_case():
    return nn.MaxPool1d(), (2, 8, 3)


def l2norm_case():
    return nn.L2Normalize(), (4, 6)


def residual_case():
    return nn.ResidualBlock(4, rng64(14), dtype=np.float64), (2, 4, 4, 4)


@pytest.mark.parametrize("case", [
    conv2d_stride1, conv2d_stride2, conv1d_case, dense_case, bn_case,
    pool2d_case, pool1d_case, l2norm_case, residual_case,
], ids=lambda c: c.__name__)
def test_parameter_gradients_match_finite_differences(case):
    layer, shape = case()
    rng = rng64(20)
    x = rng.standard_normal(shape)
    if isinstance(layer, nn.ReLU):
        x = x + np.sign(x) * 1e-2  # keep away from the kink
    loss_only = run_loss(layer, x)
    if layer.params():
        err = check_gradients(loss_only, layer.params(), rng64(21), samples_per_param=50)
        assert err < 1e-5, f"param grad rel error {err}"


@pytest.mark.parametrize("case", [
    conv2d_stride1, conv2d_stride2, conv1d_case, dense_case, bn_case,
    pool2d_case, pool1d_case, l2norm_case, residual_case,
], ids=lambda c: c.__name__)
def test_input_gradients_match_finite_differences(case):
    layer, shape = case()
    rng = rng64(22)
    x = rng.standard_normal(shape)
    # avoid pooling/relu ties: nudge duplicated values apart
    x += rng.standard_normal(shape) * 1e-3
    proj = rng.standard_normal(layer.forward(x, train=True)[0].shape)

    def loss_only():
        y, _ = layer.forward(x, train=True)
        return float((y * proj).sum())

    y, cache = layer.forward(x, train=True)
    nn.zero_grads(layer.params())
    dx = layer.backward(proj, cache)

    eps = 1e-5
    flat = x.reshape(-1)
    dflat = dx.reshape(-1)
    idxs = rng64(23).choice(flat.size, size=min(60, flat.size), replace=False)
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + eps
        lp = loss_only()
        flat[i] = orig - eps
        lm = loss_only()
        flat[i] = orig
        num = (lp - lm) / (2 * eps)
        err = abs(num - dflat[i]) / max(abs(num), abs(dflat[i]), 1e-3)
        assert err < 1e-5, f"input grad rel error {err} at {i}"


def test_zero_upstream_gradient_gives_zero_param_grads():
    layer, shape = conv2d_stride1()
    x = rng64(30).standard_normal(shape)
    y, cache = layer.forward(x, train=True)
    nn.zero_grads(layer.params())
    layer.backward(np.zeros_like(y), cache)
    for p in layer.params():
        assert not p.grad.any()


def test_every_forward_touched_param_receives_gradient():
    rng = rng64(31)
    model = nn.Sequential([
        ("conv", nn.Conv2d(3, 4, rng, dtype=np.float64)),
        ("bn", nn.BatchNorm(4, dtype=np.float64)),
        ("relu", nn.ReLU()),
        ("pool", nn.MaxPool2d()),
        ("flat", nn.Flatten()),
        ("fc", nn.Dense(4 * 4 * 4, 3, rng, dtype=np.float64)),
    ])
    x = rng.standard_normal((4, 8, 8, 3))
    run_loss(model, x)
    for p in model.params():
        assert np.abs(p.grad).max() > 0.0, f"param {p.name} got no gradient"


def test_dense_gradient_closed_form():
    rng = rng64(32)
    layer = nn.Dense(5, 3, rng, dtype=np.float64)
    x = rng.standard_normal((4, 5))
    y, cache = layer.forward(x, train=True)
    delta = rng.standard_normal(y.shape)
    nn.zero_grads(layer.params())
    layer.backward(delta, cache)
    np.testing.assert_allclose(layer.W.grad, x.T @ delta, atol=1e-12)
    np.testing.assert_allclose(layer.b.grad, delta.sum(axis=0), atol=1e-12)
