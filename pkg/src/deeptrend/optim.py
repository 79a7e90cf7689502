"""Adam and a seeded mini-batch training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .tensor import make_rng

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


class Trainable(Protocol):
    """Anything :func:`train` can fit.

    ``parameters`` returns the live arrays, updated in place.
    ``loss_grad`` returns the batch loss and a gradient per parameter name.
    """

    def parameters(self) -> dict[str, np.ndarray]: ...

    def loss_grad(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]: ...


@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(f"gradient {name!r} has shape {g.shape}, parameter has {params[name].shape}")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        params[name] -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 20
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def train(model: Trainable, dataset, config: TrainConfig) -> list[float]:
    """Fit ``model`` on ``dataset.inputs``/``dataset.targets`` with Adam.

    Every epoch visits the samples in a fresh permutation drawn from a
    generator seeded with ``config.seed``. Returns the sample-weighted mean
    batch loss of each epoch.
    """
    inputs, targets = dataset.inputs, dataset.targets
    n = len(inputs)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(targets) != n:
        raise ValueError(f"{n} inputs but {len(targets)} targets")
    rng = make_rng(config.seed)
    state = AdamState(learning_rate=config.learning_rate)
    params = model.parameters()
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = model.loss_grad(inputs[idx], targets[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became non-finite in epoch {epoch}")
            adam_step(params, grads, state)
            total += loss * len(idx)
        history.append(total / n)
        log.debug("epoch %d loss %.6g", epoch, history[-1])
    return history
