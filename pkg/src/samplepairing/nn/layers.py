"""Layer implementations with cached forward state and exact backward passes.

Activations are NHWC for spatial layers and (N, D) after the first fully
connected layer.
"""

from __future__ import annotations

import numpy as np


class CacheError(RuntimeError):
    """Backward called without a matching training-mode forward."""


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_cache(self, dy):
        if self._cache is None:
            raise CacheError(f"{self.kind}: backward without a cached training forward")
        cache = self._cache
        if cache["out_shape"] != dy.shape:
            raise CacheError(
                f"{self.kind}: upstream gradient {dy.shape} does not match output {cache['out_shape']}"
            )
        return cache

    def clear_cache(self):
        self._cache = None

    def nonsmooth_state(self) -> list[np.ndarray]:
        """Arrays that change only where the layer is not differentiable."""
        return []


class Conv3x3(Layer):
    """3x3 convolution, stride 1, zero padding 1 (spatial size preserved)."""

    kind = "conv"

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        fan_in = 9 * in_channels
        self.in_channels, self.out_channels = in_channels, out_channels
        self.params["W"] = (rng.standard_normal((3, 3, in_channels, out_channels)) * np.sqrt(2.0 / fan_in)).astype(dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)

    def forward(self, x, train, rng):
        n, h, w, c = x.shape
        if c != self.in_channels:
            raise ValueError(f"conv expects {self.in_channels} channels, got {c}")
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        # column order (ki, kj, c) matches W.reshape(9 * C, F)
        cols = np.concatenate(
            [xp[:, i : i + h, j : j + w, :] for i in range(3) for j in range(3)], axis=-1
        ).reshape(n * h * w, 9 * c)
        y = cols @ self.params["W"].reshape(9 * c, -1) + self.params["b"]
        y = y.reshape(n, h, w, self.out_channels)
        if train:
            self._cache = {"cols": cols, "x_shape": x.shape, "out_shape": y.shape}
        return y

    def backward(self, dy):
        cache = self._take_cache(dy)
        n, h, w, c = cache["x_shape"]
        dy2 = dy.reshape(-1, self.out_channels)
        W = self.params["W"].reshape(9 * c, -1)
        self.grads["W"] = (cache["cols"].T @ dy2).reshape(self.params["W"].shape)
        self.grads["b"] = dy2.sum(axis=0)
        dcols = (dy2 @ W.T).reshape(n, h, w, 9, c)
        dxp = np.zeros((n, h + 2, w + 2, c), dtype=dy.dtype)
        for idx in range(9):
            i, j = divmod(idx, 3)
            dxp[:, i : i + h, j : j + w, :] += dcols[:, :, :, idx, :]
        return dxp[:, 1:-1, 1:-1, :]


class FullyConnected(Layer):
    kind = "fc"

    def __init__(self, in_units: int, out_units: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.in_units, self.out_units = in_units, out_units
        self.params["W"] = (rng.standard_normal((in_units, out_units)) * np.sqrt(2.0 / in_units)).astype(dtype)
        self.params["b"] = np.zeros(out_units, dtype=dtype)

    def forward(self, x, train, rng):
        x2 = x.reshape(len(x), -1)
        if x2.shape[1] != self.in_units:
            raise ValueError(f"fc expects {self.in_units} inputs, got {x2.shape[1]}")
        y = x2 @ self.params["W"] + self.params["b"]
        if train:
            self._cache = {"x": x2, "x_shape": x.shape, "out_shape": y.shape}
        return y

    def backward(self, dy):
        cache = self._take_cache(dy)
        self.grads["W"] = cache["x"].T @ dy
        self.grads["b"] = dy.sum(axis=0)
        return (dy @ self.params["W"].T).reshape(cache["x_shape"])


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train, rng):
        mask = x > 0
        if train:
            self._cache = {"mask": mask, "out_shape": x.shape}
        return x * mask

    def backward(self, dy):
        return dy * self._take_cache(dy)["mask"]

    def nonsmooth_state(self):
        return [] if self._cache is None else [self._cache["mask"]]


class MaxPool2x2(Layer):
    """2x2 max pooling, stride 2; odd sizes are padded so the last row and
    column get their own window (ceil mode)."""

    kind = "pool"

    def forward(self, x, train, rng):
        n, h, w, c = x.shape
        ho, wo = -(-h // 2), -(-w // 2)
        if (ho * 2, wo * 2) != (h, w):
            x = np.pad(x, ((0, 0), (0, ho * 2 - h), (0, wo * 2 - w), (0, 0)), constant_values=-np.inf)
        windows = x.reshape(n, ho, 2, wo, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
        arg = windows.argmax(axis=-1)
        y = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
        if train:
            self._cache = {"arg": arg, "in_shape": (n, h, w, c), "out_shape": y.shape}
        return y

    def backward(self, dy):
        cache = self._take_cache(dy)
        n, h, w, c = cache["in_shape"]
        ho, wo = dy.shape[1:3]
        dwin = np.zeros((n, ho, wo, c, 4), dtype=dy.dtype)
        np.put_along_axis(dwin, cache["arg"][..., None], dy[..., None], axis=-1)
        dx = dwin.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, ho * 2, wo * 2, c)
        return dx[:, :h, :w, :]

    def nonsmooth_state(self):
        return [] if self._cache is None else [self._cache["arg"]]


class BatchNorm(Layer):
    """Per-channel normalisation over every axis but the last."""

    kind = "bn"

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.momentum, self.eps = momentum, eps
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def forward(self, x, train, rng):
        if x.shape[-1] != self.channels:
            raise ValueError(f"batchnorm expects {self.channels} channels, got {x.shape[-1]}")
        axes = tuple(range(x.ndim - 1))
        gamma, beta = self.params["gamma"], self.params["beta"]
        if not train:
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            return ((x - self.running_mean) * inv * gamma + beta).astype(x.dtype, copy=False)
        m = x.size // self.channels
        mean = x.mean(axis=axes)
        centred = x - mean
        var = (centred * centred).mean(axis=axes)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = centred * inv
        self._cache = {"xhat": xhat, "inv": inv, "m": m, "out_shape": x.shape}
        # running variance uses the unbiased estimate
        unbiased = var * (m / max(m - 1, 1))
        self.running_mean = (self.momentum * self.running_mean + (1 - self.momentum) * mean).astype(x.dtype)
        self.running_var = (self.momentum * self.running_var + (1 - self.momentum) * unbiased).astype(x.dtype)
        return xhat * gamma + beta

    def backward(self, dy):
        cache = self._take_cache(dy)
        xhat, inv, m = cache["xhat"], cache["inv"], cache["m"]
        axes = tuple(range(dy.ndim - 1))
        self.grads["beta"] = dy.sum(axis=axes)
        self.grads["gamma"] = (dy * xhat).sum(axis=axes)
        dxhat = dy * self.params["gamma"]
        return (inv / m) * (
            m * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes)
        )


class Dropout(Layer):
    """Inverted dropout: kept units are scaled by 1 / (1 - rate) in training."""

    kind = "dropout"

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train, rng):
        if not train or self.rate == 0.0:
            if train:
                self._cache = {"mask": None, "out_shape": x.shape}
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        keep = 1.0 - self.rate
        mask = (rng.random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
        self._cache = {"mask": mask, "out_shape": x.shape}
        return x * mask

    def backward(self, dy):
        mask = self._take_cache(dy)["mask"]
        return dy if mask is None else dy * mask
