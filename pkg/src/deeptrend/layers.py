"""Dense and LSTM layers with hand-written backward passes.

Column convention throughout: an input batch is ``(features, batch)``.
Gradients accumulate into the ``grads`` dict of each layer until
:meth:`zero_grad` is called.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    ShapeError,
    activation_grad,
    elementwise,
    glorot_scale,
    init_uniform,
    sigmoid,
)


class DenseLayer:
    """Fully connected layer ``activation(W @ x + b)``."""

    def __init__(self, n_in: int, n_out: int, activation: str = "identity", rng=None):
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        if rng is None:
            W = np.zeros((n_out, n_in))
        else:
            W = init_uniform(n_out, n_in, glorot_scale(n_in, n_out), rng)
        self.params = {"W": W, "b": np.zeros((n_out, 1))}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        if x.ndim != 2 or x.shape[0] != self.n_in:
            raise ShapeError(f"dense layer expects ({self.n_in}, batch) input, got {x.shape}")
        pre = self.params["W"] @ x + self.params["b"]
        out = elementwise(self.activation, pre)
        return out, (x, pre, out)

    def backward(self, cache: tuple, dy: np.ndarray) -> np.ndarray:
        x, pre, out = cache
        if dy.shape != out.shape:
            raise ShapeError(f"upstream gradient {dy.shape} does not match output {out.shape}")
        dpre = dy * activation_grad(self.activation, pre, out)
        self.grads["W"] += dpre @ x.T
        self.grads["b"] += dpre.sum(axis=1, keepdims=True)
        return self.params["W"].T @ dpre


GATES = ("i", "f", "o", "c")


@dataclass
class LstmTrace:
    """Per-step values recorded by :meth:`LstmLayer.forward` for BPTT.

    ``h[0]`` and ``c[0]`` are the zero initial state, so ``h`` and ``c``
    are one longer than ``x``.
    """

    x: list = field(default_factory=list)
    h: list = field(default_factory=list)
    c: list = field(default_factory=list)
    i: list = field(default_factory=list)
    f: list = field(default_factory=list)
    o: list = field(default_factory=list)
    g: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.x)


class LstmLayer:
    """Single LSTM layer with input, forget and output gates.

    Parameters are stored per gate as ``W_x{gate}`` (H x d),
    ``W_h{gate}`` (H x H) and ``b_{gate}`` (H x 1), where gate ``c`` is the
    candidate memory.
    """

    def __init__(self, n_in: int, n_hidden: int, rng=None):
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.params: dict[str, np.ndarray] = {}
        for gate in GATES:
            if rng is None:
                Wx = np.zeros((n_hidden, n_in))
                Wh = np.zeros((n_hidden, n_hidden))
            else:
                # fan_out counts all four gates sharing the input
                Wx = init_uniform(n_hidden, n_in, glorot_scale(n_in, 4 * n_hidden), rng)
                Wh = init_uniform(n_hidden, n_hidden, glorot_scale(n_hidden, 4 * n_hidden), rng)
            self.params[f"W_x{gate}"] = Wx
            self.params[f"W_h{gate}"] = Wh
            self.params[f"b_{gate}"] = np.zeros((n_hidden, 1))
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def _pre(self, gate: str, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        p = self.params
        return p[f"W_x{gate}"] @ x + p[f"W_h{gate}"] @ h + p[f"b_{gate}"]

    def forward(self, sequence) -> tuple[np.ndarray, LstmTrace]:
        if len(sequence) == 0:
            raise ShapeError("LSTM input sequence is empty")
        batch = sequence[0].shape[1]
        h = np.zeros((self.n_hidden, batch))
        c = np.zeros((self.n_hidden, batch))
        trace = LstmTrace(h=[h], c=[c])
        for x in sequence:
            if x.ndim != 2 or x.shape != (self.n_in, batch):
                raise ShapeError(f"LSTM step expects ({self.n_in}, {batch}), got {x.shape}")
            i = sigmoid(self._pre("i", x, h))
            f = sigmoid(self._pre("f", x, h))
            o = sigmoid(self._pre("o", x, h))
            g = np.tanh(self._pre("c", x, h))
            c = f * c + i * g
            h = o * np.tanh(c)
            trace.x.append(x)
            trace.h.append(h)
            trace.c.append(c)
            trace.i.append(i)
            trace.f.append(f)
            trace.o.append(o)
            trace.g.append(g)
        return h, trace

    def backward(self, trace: LstmTrace, dh_final: np.ndarray) -> list[np.ndarray]:
        """Backpropagate through time from the final hidden state.

        Returns the gradient with respect to each input step.
        """
        p, gr = self.params, self.grads
        if len(trace) == 0 or trace.h[-1].shape != dh_final.shape:
            raise ShapeError(
                f"dh_final {dh_final.shape} does not match trace state "
                f"{trace.h[-1].shape if len(trace) else None}"
            )
        if trace.x[0].shape[0] != self.n_in or trace.h[0].shape[0] != self.n_hidden:
            raise ShapeError("trace was not produced by a layer of this shape")
        dh = dh_final
        dc = np.zeros_like(dh_final)
        dxs: list[np.ndarray] = [None] * len(trace)  # type: ignore[list-item]
        for t in range(len(trace) - 1, -1, -1):
            x, h_prev, c_prev = trace.x[t], trace.h[t], trace.c[t]
            c_t = trace.c[t + 1]
            i, f, o, g = trace.i[t], trace.f[t], trace.o[t], trace.g[t]
            tc = np.tanh(c_t)
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            d_pre = {
                "i": dc * g * i * (1.0 - i),
                "f": dc * c_prev * f * (1.0 - f),
                "o": do * o * (1.0 - o),
                "c": dc * i * (1.0 - g * g),
            }
            dx = np.zeros_like(x)
            dh = np.zeros_like(h_prev)
            for gate, da in d_pre.items():
                gr[f"W_x{gate}"] += da @ x.T
                gr[f"W_h{gate}"] += da @ h_prev.T
                gr[f"b_{gate}"] += da.sum(axis=1, keepdims=True)
                dx += p[f"W_x{gate}"].T @ da
                dh += p[f"W_h{gate}"].T @ da
            dc = dc * f
            dxs[t] = dx
        return dxs


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient."""
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
