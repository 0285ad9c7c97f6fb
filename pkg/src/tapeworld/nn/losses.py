"""Classification loss used by every pair-classification head."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross-entropy between softmax(logits) and a target distribution.

    Accepts a single (K,) pair or a batch (B, K); returns per-row loss and
    the gradient w.r.t. logits (softmax(logits) - target). Targets must be
    distributions: entries summing to 1 within 1e-6.
    """
    if logits.shape != target.shape:
        raise ContractViolation(f"logits {logits.shape} vs target {target.shape}")
    sums = target.sum(axis=-1)
    if not np.all(np.abs(sums - 1.0) <= 1e-6):
        raise ContractViolation("target rows must sum to 1 within 1e-6")
    if np.any(target < 0):
        raise ContractViolation("target entries must be nonnegative")
    z = logits - logits.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - logsumexp
    loss = -(target * logp).sum(axis=-1)
    grad = np.exp(logp) - target
    return loss, grad
