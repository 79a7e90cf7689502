"""Dense float64 kernels shared by every layer.

Matrices are plain 2-D ``numpy.ndarray`` objects in C (row-major) order.
The helpers here add the shape checking, the four activation kinds and a
seeded initializer; everything else is ordinary numpy.
"""

from __future__ import annotations

from typing import IO

import numpy as np

ACTIVATIONS = ("sigmoid", "tanh", "relu", "identity")


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        raise ShapeError(f"expected shape ({rows}, {cols}), got {m.shape}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def elementwise(kind: str, m: np.ndarray) -> np.ndarray:
    """Apply activation ``kind`` entrywise."""
    if kind == "sigmoid":
        return sigmoid(m)
    if kind == "tanh":
        return np.tanh(m)
    if kind == "relu":
        return relu(m)
    if kind == "identity":
        return np.array(m, dtype=np.float64, copy=True)
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activation_grad(kind: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    """Derivative of the activation, given pre- and post-activation values.

    The relu subgradient at exactly 0 is taken as 0.
    """
    if kind == "sigmoid":
        return post * (1.0 - post)
    if kind == "tanh":
        return 1.0 - post * post
    if kind == "relu":
        return (pre > 0.0).astype(np.float64)
    if kind == "identity":
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; its stream is fixed by the seed on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def glorot_scale(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_uniform(rows: int, cols: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return rng.uniform(-scale, scale, size=(rows, cols))


def write_matrix(fh: IO[str], m: np.ndarray) -> None:
    """Write ``rows cols`` then the row-major values, one per line.

    ``float.hex`` keeps the round trip bit-exact.
    """
    rows, cols = m.shape
    fh.write(f"{rows} {cols}\n")
    for v in np.ascontiguousarray(m).ravel():
        fh.write(float(v).hex() + "\n")


def read_matrix(fh: IO[str]) -> np.ndarray:
    header = fh.readline().split()
    if len(header) != 2:
        raise ValueError(f"bad matrix header {header!r}")
    rows, cols = int(header[0]), int(header[1])
    data = [float.fromhex(fh.readline().strip()) for _ in range(rows * cols)]
    return np.array(data, dtype=np.float64).reshape(rows, cols)
