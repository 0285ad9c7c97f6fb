"""Hand-rolled differentiable layers over numpy arrays.

Conventions
-----------
* Activations are channels-last: images ``(B, H, W, C)``, 1-D signals
  ``(B, T, C)``, vectors ``(B, F)``.
* ``forward(x, train)`` returns ``(y, cache)``; ``backward(dy, cache)``
  returns ``dx`` and *accumulates* parameter gradients into ``Param.grad``.
  Caches are explicit so a shared module can run several forwards per step
  (e.g. the same embedder applied to both halves of a pair).
* Convolutions are direct (shifted GEMMs); no FFT/Winograd paths.
* Parameters are created in a caller-chosen dtype: float32 for training,
  float64 for finite-difference verification.

Weight init is fan-in-scaled uniform with zero biases; batch-norm keeps
per-channel running statistics (momentum 0.99) used in eval mode.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation

BN_MOMENTUM = 0.99
BN_EPS = 1e-5


class Param:
    """A trainable tensor plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)


class Layer:
    """Base layer; stateless unless it declares params/buffers."""

    def params(self) -> list[Param]:
        return []

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        return []

    def forward(self, x: np.ndarray, train: bool):
        raise NotImplementedError

    def backward(self, dy: np.ndarray, cache):
        raise NotImplementedError


def _uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, dtype=np.float32):
        self.W = Param("W", _uniform_init(rng, (in_features, out_features), in_features, dtype))
        self.b = Param("b", np.zeros(out_features, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.W.value.shape[0]:
            raise ContractViolation(
                f"dense: expected (B, {self.W.value.shape[0]}), got {x.shape}"
            )
        return x @ self.W.value + self.b.value, x

    def backward(self, dy, cache):
        x = cache
        self.W.grad += x.T @ dy
        self.b.grad += dy.sum(axis=0)
        return dy @ self.W.value.T


class Conv2d(Layer):
    """3x3 convolution, padding 1, stride 1 or 2, channels-last.

    Implemented as 9 shifted GEMMs on the padded input; the same shift
    decomposition drives both gradient paths, so strides need no separate
    col2im machinery.
    """

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 stride: int = 1, dtype=np.float32):
        if stride not in (1, 2):
            raise ContractViolation(f"conv2d stride must be 1 or 2, got {stride}")
        self.stride = stride
        self.W = Param("W", _uniform_init(rng, (3, 3, in_channels, out_channels), 9 * in_channels, dtype))
        self.b = Param("b", np.zeros(out_channels, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def _out_hw(self, h: int, w: int) -> tuple[int, int]:
        return (h - 1) // self.stride + 1, (w - 1) // self.stride + 1

    def forward(self, x, train):
        cin = self.W.value.shape[2]
        if x.ndim != 4 or x.shape[3] != cin:
            raise ContractViolation(f"conv2d: expected (B, H, W, {cin}), got {x.shape}")
        b, h, w, _ = x.shape
        ho, wo = self._out_hw(h, w)
        s = self.stride
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        y = np.zeros((b * ho * wo, self.W.value.shape[3]), dtype=x.dtype)
        for di in range(3):
            for dj in range(3):
                sl = xp[:, di:di + (ho - 1) * s + 1:s, dj:dj + (wo - 1) * s + 1:s, :]
                y += sl.reshape(-1, cin) @ self.W.value[di, dj]
        y += self.b.value
        return y.reshape(b, ho, wo, -1), xp

    def backward(self, dy, cache):
        xp = cache
        b, ho, wo, cout = dy.shape
        cin = self.W.value.shape[2]
        s = self.stride
        dy_flat = dy.reshape(-1, cout)
        dxp = np.zeros_like(xp)
        for di in range(3):
            for dj in range(3):
                rows = slice(di, di + (ho - 1) * s + 1, s)
                cols = slice(dj, dj + (wo - 1) * s + 1, s)
                sl = xp[:, rows, cols, :].reshape(-1, cin)
                self.W.grad[di, dj] += sl.T @ dy_flat
                dxp[:, rows, cols, :] += (dy_flat @ self.W.value[di, dj].T).reshape(b, ho, wo, cin)
        self.b.grad += dy_flat.sum(axis=0)
        return dxp[:, 1:-1, 1:-1, :]


class Conv1d(Layer):
    """Width-8 1-D convolution over (B, T, C), same-length output.

    Even kernel, so padding is asymmetric: 3 left, 4 right.
    """

    KERNEL = 8
    PAD = (3, 4)

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype=np.float32):
        self.W = Param("W", _uniform_init(rng, (self.KERNEL, in_channels, out_channels),
                                          self.KERNEL * in_channels, dtype))
        self.b = Param("b", np.zeros(out_channels, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def forward(self, x, train):
        cin = self.W.value.shape[1]
        if x.ndim != 3 or x.shape[2] != cin:
            raise ContractViolation(f"conv1d: expected (B, T, {cin}), got {x.shape}")
        b, t, _ = x.shape
        xp = np.pad(x, ((0, 0), self.PAD, (0, 0)))
        y = np.zeros((b * t, self.W.value.shape[2]), dtype=x.dtype)
        for k in range(self.KERNEL):
            y += xp[:, k:k + t, :].reshape(-1, cin) @ self.W.value[k]
        y += self.b.value
        return y.reshape(b, t, -1), xp

    def backward(self, dy, cache):
        xp = cache
        b, t, cout = dy.shape
        cin = self.W.value.shape[1]
        dy_flat = dy.reshape(-1, cout)
        dxp = np.zeros_like(xp)
        for k in range(self.KERNEL):
            sl = xp[:, k:k + t, :].reshape(-1, cin)
            self.W.grad[k] += sl.T @ dy_flat
            dxp[:, k:k + t, :] += (dy_flat @ self.W.value[k].T).reshape(b, t, cin)
        self.b.grad += dy_flat.sum(axis=0)
        return dxp[:, self.PAD[0]:xp.shape[1] - self.PAD[1], :]


class ReLU(Layer):
    def forward(self, x, train):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache


class BatchNorm(Layer):
    """Per-channel batch normalization over all leading axes.

    Train mode normalizes by batch statistics (biased variance) and updates
    running stats; eval mode uses the running stats, making the output
    independent of batch composition.
    """

    def __init__(self, channels: int, dtype=np.float32, momentum: float = BN_MOMENTUM):
        self.gamma = Param("gamma", np.ones(channels, dtype=dtype))
        self.beta = Param("beta", np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum = momentum

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def forward(self, x, train):
        if x.shape[-1] != self.gamma.value.shape[0]:
            raise ContractViolation(
                f"batchnorm: expected {self.gamma.value.shape[0]} channels, got {x.shape}"
            )
        axes = tuple(range(x.ndim - 1))
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.running_mean *= m
            self.running_mean += (1.0 - m) * mean.astype(self.running_mean.dtype)
            self.running_var *= m
            self.running_var += (1.0 - m) * var.astype(self.running_var.dtype)
        else:
            mean = self.running_mean
            var = self.running_var
        invstd = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mean) * invstd
        y = self.gamma.value * xhat + self.beta.value
        return y, (xhat, invstd, train)

    def backward(self, dy, cache):
        xhat, invstd, train = cache
        axes = tuple(range(dy.ndim - 1))
        self.beta.grad += dy.sum(axis=axes)
        self.gamma.grad += (dy * xhat).sum(axis=axes)
        dxhat = dy * self.gamma.value
        if not train:
            return dxhat * invstd
        n = np.prod([dy.shape[a] for a in axes])
        return (invstd / n) * (n * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes))


class MaxPool2d(Layer):
    """2x2 max pooling, stride 2; ties route to the first maximum."""

    def forward(self, x, train):
        b, h, w, c = x.shape
        if h % 2 or w % 2:
            raise ContractViolation(f"maxpool2d: spatial dims must be even, got {x.shape}")
        win = x.reshape(b, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, h // 2, w // 2, 4, c)
        idx = win.argmax(axis=3)
        y = np.take_along_axis(win, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        return y, (idx, x.shape)

    def backward(self, dy, cache):
        idx, shape = cache
        b, h, w, c = shape
        dwin = np.zeros((b, h // 2, w // 2, 4, c), dtype=dy.dtype)
        np.put_along_axis(dwin, idx[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
        return dwin.reshape(b, h // 2, w // 2, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(shape)


class MaxPool1d(Layer):
    """2x max pooling over the time axis of (B, T, C)."""

    def forward(self, x, train):
        b, t, c = x.shape
        if t % 2:
            raise ContractViolation(f"maxpool1d: time dim must be even, got {x.shape}")
        win = x.reshape(b, t // 2, 2, c)
        idx = win.argmax(axis=2)
        y = np.take_along_axis(win, idx[:, :, None, :], axis=2)[:, :, 0, :]
        return y, (idx, x.shape)

    def backward(self, dy, cache):
        idx, shape = cache
        b, t, c = shape
        dwin = np.zeros((b, t // 2, 2, c), dtype=dy.dtype)
        np.put_along_axis(dwin, idx[:, :, None, :], dy[:, :, None, :], axis=2)
        return dwin.reshape(shape)


class Flatten(Layer):
    def forward(self, x, train):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache)


class L2Normalize(Layer):
    """Row-wise x / ||x||; a tiny epsilon keeps the gradient finite at 0."""

    EPS = 1e-24

    def forward(self, x, train):
        norm = np.sqrt((x * x).sum(axis=-1, keepdims=True) + self.EPS)
        y = x / norm
        return y, (x, norm)

    def backward(self, dy, cache):
        x, norm = cache
        return dy / norm - x * ((x * dy).sum(axis=-1, keepdims=True) / norm ** 3)


class Sequential(Layer):
    """Ordered, named layer chain with optional intermediate taps."""

    def __init__(self, layers: list[tuple[str, Layer]]):
        self.layers = layers

    def params(self):
        out = []
        for name, layer in self.layers:
            for p in layer.params():
                out.append(p)
        return out

    def named_state(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        """Flat (name, array) view of parameters and buffers, stable order."""
        out = []
        for name, layer in self.layers:
            sub = f"{prefix}{name}/"
            if isinstance(layer, (Sequential, ResidualBlock)):
                out.extend(layer.named_state(sub))
            else:
                for p in layer.params():
                    out.append((sub + p.name, p.value))
                for bname, buf in layer.buffers():
                    out.append((sub + bname, buf))
        return out

    def forward(self, x, train):
        caches = []
        for name, layer in self.layers:
            x, c = layer.forward(x, train)
            caches.append(c)
        return x, caches

    def forward_taps(self, x, train: bool, taps: set[str]) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Forward pass that also returns the named layers' outputs."""
        grabbed: dict[str, np.ndarray] = {}
        for name, layer in self.layers:
            x, _ = layer.forward(x, train)
            if name in taps:
                grabbed[name] = x
        return x, grabbed

    def backward(self, dy, caches):
        for (name, layer), c in zip(reversed(self.layers), reversed(caches)):
            dy = layer.backward(dy, c)
        return dy


class ResidualBlock(Layer):
    """conv-bn-relu-conv-bn plus identity, then relu; no down-sampling."""

    def __init__(self, channels: int, rng: np.random.Generator, dtype=np.float32):
        self.body = Sequential([
            ("conv1", Conv2d(channels, channels, rng, dtype=dtype)),
            ("bn1", BatchNorm(channels, dtype=dtype)),
            ("relu1", ReLU()),
            ("conv2", Conv2d(channels, channels, rng, dtype=dtype)),
            ("bn2", BatchNorm(channels, dtype=dtype)),
        ])

    def params(self):
        return self.body.params()

    def named_state(self, prefix: str = ""):
        return self.body.named_state(prefix)

    def forward(self, x, train):
        h, caches = self.body.forward(x, train)
        s = h + x
        mask = s > 0
        return s * mask, (caches, mask)

    def backward(self, dy, cache):
        caches, mask = cache
        ds = dy * mask
        return self.body.backward(ds, caches) + ds


def zero_grads(params: list[Param]) -> None:
    for p in params:
        p.grad[...] = 0.0


def global_grad_norm(params: list[Param]) -> float:
    total = 0.0
    for p in params:
        total += float((p.grad.astype(np.float64) ** 2).sum())
    return float(np.sqrt(total))


def clip_grads(params: list[Param], max_norm: float) -> float:
    """Scale all gradients so their global norm is at most ``max_norm``."""
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for p in params:
            p.grad *= scale
    return norm
