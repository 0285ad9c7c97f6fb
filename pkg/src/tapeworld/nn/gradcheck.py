"""Central finite-difference verification of analytic gradients.

The caller runs forward+backward once so ``Param.grad`` holds the analytic
gradients, then hands us a loss-only closure. We perturb a random subset of
entries per parameter (central differences, eps 1e-5) and report the worst
relative error. Meant to run on float64-built models; float32 has too little
headroom for the 1e-5 bar.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Param

DEFAULT_EPS = 1e-5
# Relative-error denominator floor: keeps finite-difference noise on
# near-zero gradients from registering as spurious mismatches while still
# flagging any real (order-of-gradient) error.
REL_FLOOR = 1e-3


def check_gradients(loss_fn: Callable[[], float], params: list[Param],
                    rng: np.random.Generator, samples_per_param: int = 200,
                    eps: float = DEFAULT_EPS) -> float:
    """Max relative error between analytic and numeric gradients.

    ``loss_fn`` must recompute the full forward pass (train-mode batch
    statistics included) from current parameter values.
    """
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        gflat = p.grad.reshape(-1)
        n = flat.shape[0]
        idxs = np.arange(n) if n <= samples_per_param else rng.choice(n, size=samples_per_param, replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            lo_plus = loss_fn()
            flat[i] = orig - eps
            lo_minus = loss_fn()
            flat[i] = orig
            numeric = (lo_plus - lo_minus) / (2.0 * eps)
            analytic = gflat[i]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)
            if err > worst:
                worst = err
    return float(worst)
