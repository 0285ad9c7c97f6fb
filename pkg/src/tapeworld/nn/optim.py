"""Bias-corrected Adam."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .layers import Param


class Adam:
    """Standard Adam over a fixed parameter list.

    Keeps (m, v) slots per parameter plus a shared step counter. Gradients
    containing NaN are rejected before any state is touched.
    """

    def __init__(self, params: list[Param], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        for p in self.params:
            if np.isnan(p.grad).any():
                raise ContractViolation(f"NaN gradient in parameter {p.name!r}")
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** t
        bias2 = 1.0 - b2 ** t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            mhat = m / bias1
            vhat = v / bias2
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_arrays(self, prefix: str, param_names: list[str]) -> list[tuple[str, np.ndarray]]:
        """Optimizer slots as named arrays for training-state checkpoints."""
        out: list[tuple[str, np.ndarray]] = [
            (f"{prefix}step", np.array([self.step_count], dtype=np.float32))
        ]
        for name, m, v in zip(param_names, self.m, self.v):
            out.append((f"{prefix}m/{name}", m))
            out.append((f"{prefix}v/{name}", v))
        return out

    def load_state_arrays(self, prefix: str, param_names: list[str],
                          arrays: dict[str, np.ndarray]) -> None:
        self.step_count = int(arrays[f"{prefix}step"][0])
        for i, name in enumerate(param_names):
            self.m[i][...] = arrays[f"{prefix}m/{name}"]
            self.v[i][...] = arrays[f"{prefix}v/{name}"]
