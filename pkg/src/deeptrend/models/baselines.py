"""Comparison predictors and a factory over every model kind.

All kinds share one calling convention: ``fit(X, y, y_trend)`` and
``predict(X, y_trend)``, where ``X`` is (samples, N, 2) with flow and
simple-average trend channels and ``y_trend`` is the next-step trend.
Original-data kinds look only at the flow channel; detrended kinds fit on
``flow - trend`` and add ``y_trend`` back.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone

from ._validation import check_target, check_windows, require_fitted
from .deeptrend import DeepTrendRegressor
from .lstm import LSTMRegressor


class WindowLinearRegression(BaseEstimator, RegressorMixin):
    """Least squares on the flattened window plus an intercept.

    ``ridge`` is added to the diagonal of the normal equations to keep
    them solvable when columns are collinear.
    """

    def __init__(self, ridge: float = 1e-8):
        self.ridge = ridge

    def fit(self, X, y):
        X = check_windows(X)
        y = check_target(y, len(X))
        A = np.hstack([X.reshape(len(X), -1), np.ones((len(X), 1))])
        gram = A.T @ A + self.ridge * np.eye(A.shape[1])
        try:
            w = np.linalg.solve(gram, A.T @ y)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"normal equations are singular even with ridge {self.ridge}") from exc
        self.window_ = X.shape[1]
        self.n_features_in_ = X.shape[2]
        self.coef_ = w[:-1]
        self.intercept_ = float(w[-1])
        return self

    def predict(self, X):
        require_fitted(self, "coef_")
        X = check_windows(X, self.n_features_in_, self.window_)
        return X.reshape(len(X), -1) @ self.coef_ + self.intercept_

    def _checkpoint_meta(self) -> dict:
        return {"window": self.window_, "n_features": self.n_features_in_}

    def _checkpoint_arrays(self):
        return [("coef", self.coef_[None, :]), ("intercept", np.array([[self.intercept_]]))]

    def _restore(self, meta: dict, arrays: dict) -> None:
        self.window_ = int(meta["window"])
        self.n_features_in_ = int(meta["n_features"])
        self.coef_ = arrays["coef"][0].copy()
        self.intercept_ = float(arrays["intercept"][0, 0])


class SeasonalNaiveRegressor(BaseEstimator, RegressorMixin):
    """Predicts the simple-average trend value of the target slot."""

    def fit(self, X, y=None, y_trend=None):
        self.fitted_ = True
        return self

    def predict(self, X, y_trend=None):
        require_fitted(self, "fitted_")
        if y_trend is None:
            raise ValueError("seasonal-naive prediction needs the next-step trend values")
        return np.asarray(y_trend, dtype=np.float64).ravel().copy()

    def _checkpoint_meta(self) -> dict:
        return {}

    def _checkpoint_arrays(self):
        return []

    def _restore(self, meta: dict, arrays: dict) -> None:
        self.fitted_ = True


MODEL_KINDS = (
    "deeptrend",
    "lstm-original",
    "lstm-detrended",
    "mvlr-original",
    "mvlr-detrended",
    "seasonal-naive",
)

DISPLAY_NAMES = {
    "deeptrend": "DeepTrend",
    "lstm-original": "LSTM-O",
    "lstm-detrended": "LSTM-D",
    "mvlr-original": "MVLR-O",
    "mvlr-detrended": "MVLR-D",
    "seasonal-naive": "Seasonal-naive",
}


def _base_estimator(kind: str):
    if kind.startswith("lstm-"):
        return LSTMRegressor()
    if kind.startswith("mvlr-"):
        return WindowLinearRegression()
    if kind == "seasonal-naive":
        return SeasonalNaiveRegressor()
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


class BaselinePredictor(BaseEstimator, RegressorMixin):
    """Routes the two-channel windows to a comparison estimator by ``kind``."""

    def __init__(self, kind: str = "lstm-original", estimator=None):
        self.kind = kind
        self.estimator = estimator

    @property
    def detrended(self) -> bool:
        return self.kind.endswith("-detrended")

    def _inputs(self, X: np.ndarray) -> np.ndarray:
        if self.detrended:
            return X[:, :, :1] - X[:, :, 1:2]
        return np.ascontiguousarray(X[:, :, :1])

    def fit(self, X, y, y_trend=None):
        est = clone(self.estimator) if self.estimator is not None else _base_estimator(self.kind)
        X = check_windows(X, n_features=2)
        y = check_target(y, len(X))
        if self.kind == "seasonal-naive":
            self.estimator_ = est.fit(X, y)
            return self
        if self.detrended:
            y = y - check_target(y_trend, len(X), "y_trend")
        self.estimator_ = est.fit(self._inputs(X), y)
        return self

    def predict(self, X, y_trend=None):
        require_fitted(self, "estimator_")
        X = check_windows(X, n_features=2)
        if self.kind == "seasonal-naive":
            return self.estimator_.predict(X, check_target(y_trend, len(X), "y_trend"))
        pred = self.estimator_.predict(self._inputs(X))
        if self.detrended:
            pred = pred + check_target(y_trend, len(X), "y_trend")
        return pred

    @property
    def history_(self):
        return getattr(self.estimator_, "history_", [])


def make_model(kind: str, **params):
    """Unfitted model of ``kind`` with hyperparameters ``params``."""
    if kind == "deeptrend":
        return DeepTrendRegressor(**params)
    est = _base_estimator(kind)
    est.set_params(**params)
    return BaselinePredictor(kind, est)


def model_param_names(kind: str) -> list[str]:
    if kind == "deeptrend":
        return sorted(DeepTrendRegressor().get_params())
    return sorted(_base_estimator(kind).get_params())
