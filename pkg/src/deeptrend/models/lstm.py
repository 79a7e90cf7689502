"""One-layer LSTM forecaster: LSTM cells, hidden activation, linear output."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..dataio import WindowedDataset
from ..layers import DenseLayer, LstmLayer, mse_loss
from ..optim import TrainConfig, train
from ..tensor import activation_grad, elementwise, make_rng
from ._validation import check_target, check_windows, derive_seeds, require_fitted


def to_sequence(X: np.ndarray) -> list[np.ndarray]:
    """(batch, steps, features) -> list of (features, batch) steps."""
    return [np.ascontiguousarray(X[:, t, :].T) for t in range(X.shape[1])]


class LstmHead:
    """LSTM layer followed by ``activation`` and a dense linear head.

    Shared by :class:`LSTMRegressor` and the prediction layer of DeepTrend.
    """

    def __init__(self, n_in: int, n_hidden: int, n_out: int, activation: str, rng=None):
        self.activation = activation
        self.lstm = LstmLayer(n_in, n_hidden, rng)
        self.head = DenseLayer(n_hidden, n_out, "identity", rng)

    def parameters(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {f"{prefix}lstm.{k}": v for k, v in self.lstm.params.items()}
        out.update({f"{prefix}head.{k}": v for k, v in self.head.params.items()})
        return out

    def gradients(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {f"{prefix}lstm.{k}": v for k, v in self.lstm.grads.items()}
        out.update({f"{prefix}head.{k}": v for k, v in self.head.grads.items()})
        return out

    def zero_grad(self) -> None:
        self.lstm.zero_grad()
        self.head.zero_grad()

    def forward(self, sequence):
        h, trace = self.lstm.forward(sequence)
        a = elementwise(self.activation, h)
        out, head_cache = self.head.forward(a)
        return out, (trace, h, a, head_cache)

    def backward(self, cache, dout: np.ndarray) -> list[np.ndarray]:
        trace, h, a, head_cache = cache
        da = self.head.backward(head_cache, dout)
        dh = da * activation_grad(self.activation, h, a)
        return self.lstm.backward(trace, dh)


class _Objective:
    def __init__(self, net: LstmHead):
        self.net = net

    def parameters(self):
        return self.net.parameters()

    def loss_grad(self, inputs, targets):
        self.net.zero_grad()
        out, cache = self.net.forward(to_sequence(inputs))
        loss, dout = mse_loss(out, targets.T)
        self.net.backward(cache, dout)
        return loss, self.net.gradients()


class LSTMRegressor(BaseEstimator, RegressorMixin):
    """Next-step regression from a window with a single LSTM layer.

    Parameters
    ----------
    hidden_size : int
        Number of LSTM units.
    hidden_activation : str
        Activation between the final hidden state and the linear output.
    learning_rate, epochs, batch_size :
        Adam training settings.
    random_state : int
        Seeds both the weight initialization and the batch shuffling.
    """

    def __init__(
        self,
        hidden_size: int = 128,
        hidden_activation: str = "relu",
        learning_rate: float = 0.001,
        epochs: int = 20,
        batch_size: int = 64,
        random_state: int = 0,
    ):
        self.hidden_size = hidden_size
        self.hidden_activation = hidden_activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _build(self, n_features: int) -> None:
        init_seed, _ = derive_seeds(self.random_state, 2)
        self.net_ = LstmHead(
            n_features, self.hidden_size, 1, self.hidden_activation, make_rng(init_seed)
        )

    def fit(self, X, y):
        X = check_windows(X)
        y = check_target(y, len(X))
        self.window_ = X.shape[1]
        self.n_features_in_ = X.shape[2]
        self._build(self.n_features_in_)
        _, shuffle_seed = derive_seeds(self.random_state, 2)
        config = TrainConfig(self.learning_rate, self.epochs, self.batch_size, shuffle_seed)
        self.history_ = train(_Objective(self.net_), WindowedDataset(X, y[:, None]), config)
        return self

    def predict(self, X):
        require_fitted(self, "net_")
        X = check_windows(X, self.n_features_in_, self.window_)
        out, _ = self.net_.forward(to_sequence(X))
        return out[0].copy()

    def _checkpoint_arrays(self):
        return list(self.net_.parameters().items())

    def _restore(self, meta: dict, arrays: dict) -> None:
        self.window_ = int(meta["window"])
        self.n_features_in_ = int(meta["n_features"])
        self.net_ = LstmHead(self.n_features_in_, self.hidden_size, 1, self.hidden_activation)
        for name, arr in self.net_.parameters().items():
            arr[...] = arrays[name]

    def _checkpoint_meta(self) -> dict:
        return {"window": self.window_, "n_features": self.n_features_in_}
