import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from gradcheck import numeric_grad, rel_error

from deeptrend.layers import DenseLayer, LstmLayer, mse_loss
from deeptrend.tensor import ShapeError, make_rng


def scalar_sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def loop_lstm(params, xs, H):
    """Scalar re-implementation of one LSTM layer, batch of one."""
    d = len(xs[0])
    h = [0.0] * H
    c = [0.0] * H
    for x in xs:
        new_h, new_c = [], []
        for j in range(H):
            pre = {}
            for g in "ifoc":
                s = params[f"b_{g}"][j, 0]
                s += sum(params[f"W_x{g}"][j, k] * x[k] for k in range(d))
                s += sum(params[f"W_h{g}"][j, k] * h[k] for k in range(H))
                pre[g] = s
            i, f, o = (scalar_sigmoid(pre[g]) for g in "ifo")
            cj = f * c[j] + i * math.tanh(pre["c"])
            new_c.append(cj)
            new_h.append(o * math.tanh(cj))
        h, c = new_h, new_c
    return np.array(h)


def random_lstm(d, H, seed, scale=0.5):
    layer = LstmLayer(d, H)
    r = np.random.default_rng(seed)
    for p in layer.params.values():
        p[...] = r.normal(scale=scale, size=p.shape)
    return layer


# ---- dense ---------------------------------------------------------------


def test_dense_identity():
    layer = DenseLayer(2, 2, "identity")
    layer.params["W"][...] = np.eye(2)
    out, _ = layer.forward(np.array([[3.0], [-1.0]]))
    assert out.ravel().tolist() == [3.0, -1.0]


def test_dense_bias_only_relu(rng):
    layer = DenseLayer(3, 1, "relu")
    layer.params["b"][...] = 2.0
    out, _ = layer.forward(rng.normal(size=(3, 5)))
    assert np.all(out == 2.0)


def test_dense_matches_scalar_loop(rng):
    layer = DenseLayer(4, 3, "tanh", make_rng(1))
    layer.params["b"][...] = rng.normal(size=(3, 1))
    x = rng.normal(size=(4, 2))
    out, _ = layer.forward(x)
    W, b = layer.params["W"], layer.params["b"]
    for col in range(2):
        for j in range(3):
            ref = math.tanh(sum(W[j, k] * x[k, col] for k in range(4)) + b[j, 0])
            assert abs(out[j, col] - ref) < 1e-12


def test_dense_identity_backward_passes_gradient():
    layer = DenseLayer(2, 2, "identity")
    layer.params["W"][...] = np.eye(2)
    _, cache = layer.forward(np.array([[1.0], [2.0]]))
    dy = np.array([[0.3], [-0.7]])
    np.testing.assert_array_equal(layer.backward(cache, dy), dy)


def test_dense_dead_relu_has_zero_gradient(rng):
    layer = DenseLayer(3, 2, "relu")
    layer.params["b"][...] = -10.0
    _, cache = layer.forward(rng.uniform(-0.1, 0.1, size=(3, 4)))
    layer.backward(cache, rng.normal(size=(2, 4)))
    assert not layer.grads["W"].any() and not layer.grads["b"].any()


@pytest.mark.parametrize("activation", ["identity", "relu", "tanh", "sigmoid"])
def test_dense_gradients_match_finite_differences(activation, rng):
    layer = DenseLayer(4, 3, activation, make_rng(2))
    layer.params["b"][...] = rng.normal(size=(3, 1))
    x = rng.normal(size=(4, 5))
    target = rng.normal(size=(3, 5))

    def loss():
        return mse_loss(layer.forward(x)[0], target)[0]

    out, cache = layer.forward(x)
    _, dy = mse_loss(out, target)
    layer.zero_grad()
    dx = layer.backward(cache, dy)
    for name, p in layer.params.items():
        assert rel_error(layer.grads[name], numeric_grad(loss, p)) < 1e-4
    assert rel_error(dx, numeric_grad(loss, x)) < 1e-4


def test_dense_shape_error():
    with pytest.raises(ShapeError):
        DenseLayer(3, 2).forward(np.ones((2, 1)))


# ---- lstm ----------------------------------------------------------------


def test_lstm_zero_parameters_fixed_point(rng):
    layer = LstmLayer(2, 3)
    h, trace = layer.forward([rng.normal(size=(2, 1)) for _ in range(4)])
    assert not h.any()
    for t in range(4):
        assert np.all(trace.i[t] == 0.5) and np.all(trace.f[t] == 0.5) and np.all(trace.o[t] == 0.5)
        assert not trace.g[t].any() and not trace.c[t + 1].any()


def test_lstm_saturated_forget_gate(rng):
    layer = LstmLayer(2, 3)
    layer.params["b_f"][...] = 50.0
    _, trace = layer.forward([rng.normal(size=(2, 1)) for _ in range(4)])
    for t in range(4):
        assert np.all(trace.f[t] >= 1 - 1e-15)
        assert np.array_equal(trace.c[t + 1], trace.c[t])


def test_lstm_matches_scalar_loop():
    layer = random_lstm(2, 3, seed=3)
    r = np.random.default_rng(4)
    xs = [r.normal(size=2) for _ in range(4)]
    h, trace = layer.forward([x[:, None] for x in xs])
    assert len(trace) == 4
    np.testing.assert_allclose(h[:, 0], loop_lstm(layer.params, xs, 3), rtol=0, atol=1e-12)


def test_lstm_forward_is_reproducible():
    layer = random_lstm(2, 3, seed=5)
    seq = [np.random.default_rng(t).normal(size=(2, 2)) for t in range(5)]
    _, t1 = layer.forward(seq)
    _, t2 = layer.forward(seq)
    for a, b in zip(t1.h + t1.c + t1.i + t1.f + t1.o + t1.g, t2.h + t2.c + t2.i + t2.f + t2.o + t2.g):
        assert a.tobytes() == b.tobytes()


def test_lstm_value_ranges():
    # moderate scales: past |pre-activation| ~ 37 float64 sigmoid rounds to exactly 1
    layer = random_lstm(3, 4, seed=6, scale=1.0)
    seq = [np.random.default_rng(t).normal(scale=2, size=(3, 8)) for t in range(6)]
    _, trace = layer.forward(seq)
    for t in range(6):
        assert np.all(np.abs(trace.h[t + 1]) < 1)
        for g in (trace.i[t], trace.f[t], trace.o[t]):
            assert np.all((g > 0) & (g < 1))


def test_lstm_zero_upstream_gradient():
    layer = random_lstm(2, 3, seed=7)
    _, trace = layer.forward([np.ones((2, 1))] * 4)
    dxs = layer.backward(trace, np.zeros((3, 1)))
    assert all(not g.any() for g in layer.grads.values())
    assert all(not dx.any() for dx in dxs)


def check_lstm_gradients(d, H, T, batch, seed):
    layer = random_lstm(d, H, seed)
    r = np.random.default_rng(seed + 1000)
    seq = [r.normal(size=(d, batch)) for _ in range(T)]
    w = r.normal(size=(H, batch))

    def loss():
        return float(np.sum(w * layer.forward(seq)[0]))

    layer.zero_grad()
    _, trace = layer.forward(seq)
    dxs = layer.backward(trace, w)
    worst = 0.0
    for name, p in layer.params.items():
        worst = max(worst, rel_error(layer.grads[name], numeric_grad(loss, p)))
    for x, dx in zip(seq, dxs):
        worst = max(worst, rel_error(dx, numeric_grad(loss, x)))
    return worst


def test_lstm_bptt_matches_finite_differences():
    assert check_lstm_gradients(2, 3, 4, 1, seed=11) < 1e-4


@pytest.mark.parametrize("d,H,T", [(1, 1, 1), (4, 4, 6), (3, 2, 5), (1, 4, 2)])
def test_lstm_bptt_random_configurations(d, H, T):
    assert check_lstm_gradients(d, H, T, 2, seed=d * 100 + H * 10 + T) < 1e-4


@settings(max_examples=20, deadline=None)
@given(
    st.integers(1, 4), st.integers(1, 4), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31 - 1)
)
def test_lstm_bptt_any_small_configuration(d, H, T, batch, seed):
    assert check_lstm_gradients(d, H, T, batch, seed) < 1e-4


def test_lstm_backward_rejects_foreign_trace():
    a, b = random_lstm(2, 3, 1), random_lstm(2, 4, 1)
    _, trace = a.forward([np.ones((2, 1))])
    with pytest.raises(ShapeError):
        b.backward(trace, np.ones((4, 1)))


# ---- loss ----------------------------------------------------------------


def test_mse_loss_zero_at_target():
    loss, d = mse_loss(np.ones((2, 3)), np.ones((2, 3)))
    assert loss == 0.0 and not d.any()


def test_mse_loss_value():
    loss, _ = mse_loss(np.array([[1.0, 1.0]]), np.array([[0.0, 3.0]]))
    assert loss == 2.5


def test_mse_loss_gradient(rng):
    pred, target = rng.normal(size=(2, 4)), rng.normal(size=(2, 4))
    _, d = mse_loss(pred, target)
    assert rel_error(d, numeric_grad(lambda: mse_loss(pred, target)[0], pred)) < 1e-6


def test_mse_loss_shape_error():
    with pytest.raises(ShapeError):
        mse_loss(np.ones((1, 2)), np.ones((2, 1)))
