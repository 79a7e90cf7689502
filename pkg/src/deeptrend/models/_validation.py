"""Input checks shared by the window regressors."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def check_windows(X, n_features: int | None = None, window: int | None = None) -> np.ndarray:
    """Return ``X`` as a float64 (samples, window, features) array.

    A 2-D array is read as single-feature windows.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"expected windows of shape (samples, window[, features]), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("no samples")
    if window is not None and X.shape[1] != window:
        raise ValueError(f"expected window length {window}, got {X.shape[1]}")
    if n_features is not None and X.shape[2] != n_features:
        raise ValueError(f"expected {n_features} feature(s) per step, got {X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("windows contain NaN or infinite values")
    return np.ascontiguousarray(X)


def check_target(y, n_samples: int, name: str = "y") -> np.ndarray:
    if y is None:
        raise ValueError(f"{name} is required")
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) != n_samples:
        raise ValueError(f"{name} has {len(y)} values for {n_samples} samples")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return y


def derive_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds for initialization, shuffling, ..."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def require_fitted(est, attr: str) -> None:
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
