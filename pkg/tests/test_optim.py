import numpy as np
import pytest

from deeptrend.dataio import WindowedDataset
from deeptrend.layers import DenseLayer, mse_loss
from deeptrend.optim import AdamState, TrainConfig, TrainingDiverged, adam_step, train
from deeptrend.tensor import make_rng


def reference_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam written out per step, for comparison."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return theta


def test_zero_gradient_leaves_parameters():
    params = {"w": np.array([[1.5, -2.0]])}
    state = AdamState(learning_rate=0.1)
    adam_step(params, {"w": np.zeros((1, 2))}, state)
    assert params["w"].tolist() == [[1.5, -2.0]]
    assert state.t == 1


def test_first_step_closed_form():
    params = {"w": np.array([[0.0]])}
    adam_step(params, {"w": np.array([[7.0]])}, AdamState(learning_rate=0.01, eps=1e-8))
    assert abs(abs(params["w"][0, 0]) - 0.01 * 7 / (7 + 1e-8)) < 1e-9


def test_matches_reference_update_sequence():
    grads = [0.3, -1.2, 4.0, 0.0, 2.5]
    params = {"w": np.array([[1.0]])}
    state = AdamState(learning_rate=0.05)
    for g in grads:
        adam_step(params, {"w": np.array([[g]])}, state)
    assert params["w"][0, 0] == pytest.approx(reference_adam(1.0, grads, 0.05), abs=1e-14)


def test_minimizes_square():
    params = {"w": np.array([[1.0]])}
    state = AdamState(learning_rate=0.01)
    for step in range(2000):
        adam_step(params, {"w": 2 * params["w"]}, state)
        if abs(params["w"][0, 0]) < 1e-3:
            break
    assert abs(params["w"][0, 0]) < 1e-3


def test_non_finite_gradient_names_parameter():
    params = {"w": np.zeros((1, 1)), "bias": np.zeros((1, 1))}
    with pytest.raises(FloatingPointError, match="bias"):
        adam_step(params, {"w": np.zeros((1, 1)), "bias": np.array([[np.nan]])}, AdamState())


@pytest.mark.parametrize("kwargs", [{"epochs": 0}, {"learning_rate": 0.0}, {"batch_size": 0}])
def test_train_config_invariants(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_adam_state_invariants():
    with pytest.raises(ValueError):
        AdamState(beta1=1.0)


class DenseRegression:
    def __init__(self, n_in, seed=0):
        self.layer = DenseLayer(n_in, 1, "identity", make_rng(seed))

    def parameters(self):
        return self.layer.params

    def loss_grad(self, inputs, targets):
        self.layer.zero_grad()
        out, cache = self.layer.forward(inputs.T)
        loss, d = mse_loss(out, targets.T)
        self.layer.backward(cache, d)
        return loss, self.layer.grads


def linear_data(n=200, seed=1):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 3))
    y = X @ np.array([0.5, -1.5, 2.0]) + 0.25
    return WindowedDataset(X, y[:, None])


def test_train_fits_exact_linear_data():
    history = train(DenseRegression(3), linear_data(), TrainConfig(0.05, 300, 16, 3))
    assert history[-1] < 1e-6
    assert all(np.isfinite(history))


def test_train_is_deterministic():
    data = linear_data()
    h1 = train(DenseRegression(3), data, TrainConfig(0.01, 5, 16, 9))
    h2 = train(DenseRegression(3), data, TrainConfig(0.01, 5, 16, 9))
    assert np.array(h1).tobytes() == np.array(h2).tobytes()
    h3 = train(DenseRegression(3), data, TrainConfig(0.01, 5, 16, 10))
    assert h1 != h3


def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train(DenseRegression(3), WindowedDataset(np.zeros((0, 3)), np.zeros((0, 1))), TrainConfig())


def test_train_reports_divergence_epoch():
    class Exploding(DenseRegression):
        def loss_grad(self, inputs, targets):
            loss, grads = super().loss_grad(inputs, targets)
            return float("inf"), grads

    with pytest.raises(TrainingDiverged, match="epoch 0"):
        train(Exploding(3), linear_data(), TrainConfig(0.01, 2, 16, 0))


def test_step_count_per_epoch():
    state_steps = []

    class Counting(DenseRegression):
        def loss_grad(self, inputs, targets):
            state_steps.append(len(inputs))
            return super().loss_grad(inputs, targets)

    train(Counting(3), linear_data(n=130), TrainConfig(0.01, 2, 64, 0))
    assert state_steps == [64, 64, 2, 64, 64, 2]
