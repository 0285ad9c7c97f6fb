"""Minimal differentiable-computation engine: layers, losses, Adam, checks."""

from .gradcheck import check_gradients
from .io import assign_state, load_weights, save_weights
from .layers import (
    BatchNorm,
    Conv1d,
    Conv2d,
    Dense,
    Flatten,
    L2Normalize,
    Layer,
    MaxPool1d,
    MaxPool2d,
    Param,
    ReLU,
    ResidualBlock,
    Sequential,
    clip_grads,
    global_grad_norm,
    zero_grads,
)
from .losses import softmax, softmax_cross_entropy
from .optim import Adam

__all__ = [
    "Adam",
    "BatchNorm",
    "Conv1d",
    "Conv2d",
    "Dense",
    "Flatten",
    "L2Normalize",
    "Layer",
    "MaxPool1d",
    "MaxPool2d",
    "Param",
    "ReLU",
    "ResidualBlock",
    "Sequential",
    "assign_state",
    "check_gradients",
    "clip_grads",
    "global_grad_norm",
    "load_weights",
    "save_weights",
    "softmax",
    "softmax_cross_entropy",
    "zero_grads",
]
