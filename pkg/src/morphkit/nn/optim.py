"""Adam with a lazy mode for sparse embedding updates, plus gradient clipping."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from .autodiff import Parameter


def clip_global_norm(params: list[Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        total += float((p.grad.astype(np.float64) ** 2).sum())
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for p in params:
            p.grad *= factor
    return norm


class Adam:
    """Standard Adam with bias correction.

    Parameters flagged lazy=True (embedding tables) behave like the lazy
    variant: rows whose gradient is entirely zero in the current step keep
    both their moments and their values untouched.  Bias correction uses the
    global step counter, so on a step that touches every row the lazy and
    dense updates coincide.
    """

    def __init__(
        self,
        params: list[Parameter],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.98,
        epsilon: float = 1e-8,
    ):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.data) for p in self.params]
        self.second_moment = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, learning_rate: float | None = None) -> None:
        lr = self.learning_rate if learning_rate is None else learning_rate
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self.first_moment, self.second_moment):
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {p.name}")
            if p.lazy and g.ndim >= 2:
                rows = np.any(g.reshape(g.shape[0], -1) != 0, axis=1)
                if not rows.any():
                    continue
                gr = g[rows]
                m[rows] = self.beta1 * m[rows] + (1.0 - self.beta1) * gr
                v[rows] = self.beta2 * v[rows] + (1.0 - self.beta2) * gr * gr
                update = (m[rows] / bias1) / (np.sqrt(v[rows] / bias2) + self.epsilon)
                p.data[rows] -= lr * update
                if not np.all(np.isfinite(p.data[rows])):
                    raise TrainingError(f"non-finite values in parameter {p.name}")
            else:
                m[...] = self.beta1 * m + (1.0 - self.beta1) * g
                v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
                update = (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)
                p.data -= lr * update
                if not np.all(np.isfinite(p.data)):
                    raise TrainingError(f"non-finite values in parameter {p.name}")
