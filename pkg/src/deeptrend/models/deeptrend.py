"""DeepTrend: a dense trend-extraction stack feeding an LSTM predictor.

Input windows carry two channels per step: the observed flow and the
simple-average trend at the same weekly slot. The extraction stack maps
the concatenated ``[flow || trend]`` window (2N values) to a time-variant
trend window (N values). The prediction layer reads, per step, the pair
(extracted trend, flow - extracted trend) and emits next-step trend and
residual heads, whose sum is the flow forecast.

Training runs in three phases, in this order:

1. ``pretrain_extraction``: reconstruct the simple-average trend window.
2. ``pretrain_prediction``: extraction frozen; fit the heads to the
   next-step simple-average trend and ``flow - trend``.
3. ``finetune``: all parameters, loss on the summed forecast.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..dataio import WindowedDataset
from ..layers import DenseLayer, mse_loss
from ..optim import TrainConfig, train
from ..tensor import make_rng
from ._validation import check_target, check_windows, derive_seeds, require_fitted
from .lstm import LstmHead

PHASES = ("untrained", "extraction-pretrained", "prediction-pretrained", "finetuned")


class PhaseError(RuntimeError):
    """A training phase was called out of protocol order."""


class DeepTrendNetwork:
    """Parameter container and forward/backward passes of the full graph."""

    def __init__(self, window: int, extraction_size: int, hidden_size: int, activation: str, rng=None):
        self.window = window
        self.ext_hidden = DenseLayer(2 * window, extraction_size, "relu", rng)
        self.ext_out = DenseLayer(extraction_size, window, "identity", rng)
        self.predictor = LstmHead(2, hidden_size, 2, activation, rng)

    def extraction_parameters(self) -> dict[str, np.ndarray]:
        out = {f"extraction.hidden.{k}": v for k, v in self.ext_hidden.params.items()}
        out.update({f"extraction.out.{k}": v for k, v in self.ext_out.params.items()})
        return out

    def extraction_gradients(self) -> dict[str, np.ndarray]:
        out = {f"extraction.hidden.{k}": v for k, v in self.ext_hidden.grads.items()}
        out.update({f"extraction.out.{k}": v for k, v in self.ext_out.grads.items()})
        return out

    def parameters(self) -> dict[str, np.ndarray]:
        out = self.extraction_parameters()
        out.update(self.predictor.parameters("prediction."))
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = self.extraction_gradients()
        out.update(self.predictor.gradients("prediction."))
        return out

    def zero_grad(self) -> None:
        self.ext_hidden.zero_grad()
        self.ext_out.zero_grad()
        self.predictor.zero_grad()

    def extract(self, X: np.ndarray):
        """X (batch, N, 2) -> extracted trend (N, batch) and caches."""
        u = np.concatenate([X[:, :, 0].T, X[:, :, 1].T], axis=0)
        z, c1 = self.ext_hidden.forward(u)
        e, c2 = self.ext_out.forward(z)
        return e, (c1, c2)

    def extract_backward(self, caches, de: np.ndarray) -> None:
        c1, c2 = caches
        dz = self.ext_out.backward(c2, de)
        self.ext_hidden.backward(c1, dz)

    @staticmethod
    def features(flow: np.ndarray, trend: np.ndarray) -> list[np.ndarray]:
        """Per-step (trend, residual) inputs; flow and trend are (N, batch)."""
        resid = flow - trend
        return [np.vstack([trend[t], resid[t]]) for t in range(flow.shape[0])]

    def heads(self, X: np.ndarray):
        """Full forward pass; returns the (2, batch) heads and caches."""
        e, ext_caches = self.extract(X)
        out, pred_cache = self.predictor.forward(self.features(X[:, :, 0].T, e))
        return out, (ext_caches, pred_cache)

    def heads_backward(self, caches, dout: np.ndarray) -> None:
        ext_caches, pred_cache = caches
        dxs = self.predictor.backward(pred_cache, dout)
        # step input is (e_t, f_t - e_t), so de_t = dx_t[0] - dx_t[1]
        de = np.vstack([dx[0] - dx[1] for dx in dxs])
        self.extract_backward(ext_caches, de)


class _ExtractionObjective:
    def __init__(self, net: DeepTrendNetwork):
        self.net = net

    def parameters(self):
        return self.net.extraction_parameters()

    def loss_grad(self, inputs, targets):
        self.net.zero_grad()
        e, caches = self.net.extract(inputs)
        loss, de = mse_loss(e, targets.T)
        self.net.extract_backward(caches, de)
        return loss, self.net.extraction_gradients()


class _PredictionObjective:
    """Inputs are precomputed (batch, N, 2) step features; extraction is frozen."""

    def __init__(self, net: DeepTrendNetwork):
        self.net = net

    def parameters(self):
        return self.net.predictor.parameters("prediction.")

    def loss_grad(self, inputs, targets):
        pred = self.net.predictor
        pred.zero_grad()
        seq = [np.ascontiguousarray(inputs[:, t, :].T) for t in range(inputs.shape[1])]
        out, cache = pred.forward(seq)
        loss, dout = mse_loss(out, targets.T)
        pred.backward(cache, dout)
        return loss, pred.gradients("prediction.")


class _FinetuneObjective:
    def __init__(self, net: DeepTrendNetwork):
        self.net = net

    def parameters(self):
        return self.net.parameters()

    def loss_grad(self, inputs, targets):
        self.net.zero_grad()
        out, caches = self.net.heads(inputs)
        loss, dpred = mse_loss(out.sum(axis=0, keepdims=True), targets.T)
        self.net.heads_backward(caches, np.vstack([dpred, dpred]))
        return loss, self.net.gradients()


class DeepTrendRegressor(BaseEstimator, RegressorMixin):
    """Hierarchical trend-extraction + LSTM forecaster.

    ``X`` has shape (samples, N, 2): channel 0 is flow, channel 1 the
    simple-average trend at the same slots. ``y`` is the next-step flow and
    ``y_trend`` the next-step simple-average trend. All values are expected
    in standardized units; :meth:`predict` returns the same units.

    The defaults are the published settings: 128 extraction units, 128 LSTM
    units, Adam learning rates 0.001 / 0.005 / 0.00002 for 20 / 10 / 7
    epochs.
    """

    def __init__(
        self,
        extraction_size: int = 128,
        hidden_size: int = 128,
        hidden_activation: str = "relu",
        extraction_learning_rate: float = 0.001,
        extraction_epochs: int = 20,
        prediction_learning_rate: float = 0.005,
        prediction_epochs: int = 10,
        finetune_learning_rate: float = 0.00002,
        finetune_epochs: int = 7,
        batch_size: int = 64,
        random_state: int = 0,
    ):
        self.extraction_size = extraction_size
        self.hidden_size = hidden_size
        self.hidden_activation = hidden_activation
        self.extraction_learning_rate = extraction_learning_rate
        self.extraction_epochs = extraction_epochs
        self.prediction_learning_rate = prediction_learning_rate
        self.prediction_epochs = prediction_epochs
        self.finetune_learning_rate = finetune_learning_rate
        self.finetune_epochs = finetune_epochs
        self.batch_size = batch_size
        self.random_state = random_state

    @property
    def phase(self) -> str:
        return getattr(self, "phase_", "untrained")

    def _require_phase(self, expected: str, action: str) -> None:
        if self.phase != expected:
            raise PhaseError(f"{action} requires phase {expected!r}, model is {self.phase!r}")

    def _seeds(self) -> list[int]:
        # init, then one shuffle seed per phase
        return derive_seeds(self.random_state, 4)

    def _config(self, lr: float, epochs: int, seed: int) -> TrainConfig:
        return TrainConfig(lr, epochs, self.batch_size, seed)

    def init_network(self, window: int) -> DeepTrendNetwork:
        self.window_ = window
        self.network_ = DeepTrendNetwork(
            window,
            self.extraction_size,
            self.hidden_size,
            self.hidden_activation,
            make_rng(self._seeds()[0]),
        )
        self.phase_ = "untrained"
        self.history_ = {}
        return self.network_

    def pretrain_extraction(self, X) -> list[float]:
        self._require_phase("untrained", "pretrain_extraction")
        X = check_windows(X, n_features=2)
        self.init_network(X.shape[1])
        config = self._config(self.extraction_learning_rate, self.extraction_epochs, self._seeds()[1])
        data = WindowedDataset(X, np.ascontiguousarray(X[:, :, 1]))
        hist = train(_ExtractionObjective(self.network_), data, config)
        self.history_["extraction"] = hist
        self.phase_ = "extraction-pretrained"
        return hist

    def step_features(self, X) -> np.ndarray:
        """(samples, N, 2) prediction-layer inputs from the frozen extraction."""
        X = check_windows(X, 2, self.window_)
        e, _ = self.network_.extract(X)
        return np.stack([e.T, X[:, :, 0] - e.T], axis=2)

    def pretrain_prediction(self, X, y, y_trend) -> list[float]:
        self._require_phase("extraction-pretrained", "pretrain_prediction")
        X = check_windows(X, 2, self.window_)
        y = check_target(y, len(X))
        y_trend = check_target(y_trend, len(X), "y_trend")
        targets = np.stack([y_trend, y - y_trend], axis=1)
        config = self._config(self.prediction_learning_rate, self.prediction_epochs, self._seeds()[2])
        data = WindowedDataset(self.step_features(X), targets)
        hist = train(_PredictionObjective(self.network_), data, config)
        self.history_["prediction"] = hist
        self.phase_ = "prediction-pretrained"
        return hist

    def finetune(self, X, y) -> list[float]:
        self._require_phase("prediction-pretrained", "finetune")
        X = check_windows(X, 2, self.window_)
        y = check_target(y, len(X))
        config = self._config(self.finetune_learning_rate, self.finetune_epochs, self._seeds()[3])
        hist = train(_FinetuneObjective(self.network_), WindowedDataset(X, y[:, None]), config)
        self.history_["finetune"] = hist
        self.phase_ = "finetuned"
        return hist

    def fit(self, X, y, y_trend):
        """Run the full three-phase protocol from scratch."""
        self.phase_ = "untrained"
        self.pretrain_extraction(X)
        self.pretrain_prediction(X, y, y_trend)
        self.finetune(X, y)
        return self

    def extract_trend(self, X) -> np.ndarray:
        """Time-variant trend window for each sample, shape (samples, N)."""
        require_fitted(self, "network_")
        X = check_windows(X, 2, self.window_)
        e, _ = self.network_.extract(X)
        return e.T.copy()

    def decompose(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Next-step (trend head, residual head) per sample."""
        require_fitted(self, "network_")
        X = check_windows(X, 2, self.window_)
        out, _ = self.network_.heads(X)
        return out[0].copy(), out[1].copy()

    def predict(self, X, y_trend=None) -> np.ndarray:
        self._require_phase("finetuned", "predict")
        trend, resid = self.decompose(X)
        return trend + resid

    def _checkpoint_meta(self) -> dict:
        return {"window": self.window_, "phase": self.phase}

    def _checkpoint_arrays(self):
        return list(self.network_.parameters().items())

    def _restore(self, meta: dict, arrays: dict) -> None:
        window = int(meta["window"])
        self.window_ = window
        self.network_ = DeepTrendNetwork(window, self.extraction_size, self.hidden_size, self.hidden_activation)
        for name, arr in self.network_.parameters().items():
            arr[...] = arrays[name]
        if meta["phase"] not in PHASES:
            raise ValueError(f"unknown phase {meta['phase']!r}")
        self.phase_ = meta["phase"]
        self.history_ = {}
