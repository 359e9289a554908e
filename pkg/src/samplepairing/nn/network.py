"""Network specification, the sequential network and the soft-target loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from samplepairing.nn.layers import (
    BatchNorm,
    Conv3x3,
    Dropout,
    FullyConnected,
    Layer,
    MaxPool2x2,
    ReLU,
)

LAYER_KINDS = ("conv", "bn", "relu", "pool", "dropout", "fc", "softmax")


@dataclass(frozen=True)
class NetworkSpec:
    """Input shape (H, W, C) plus an ordered layer list.

    Layers are ``(kind,)`` or ``(kind, arg)`` tuples: ``("conv", out_channels)``,
    ``("fc", out_units)``, ``("dropout", rate)``, and argument-free ``bn``,
    ``relu``, ``pool`` and the terminal ``softmax``.
    """

    input_shape: tuple[int, int, int]
    layers: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in self.layers))
        self.shapes()  # validates

    @property
    def n_classes(self) -> int:
        return self.shapes()[-1][0]

    def shapes(self) -> list[tuple[int, ...]]:
        """Output shape of every layer (softmax excluded)."""
        if not self.layers or self.layers[-1] != ("softmax",):
            raise ValueError("the last layer must be softmax")
        shape = self.input_shape
        out = []
        for pos, layer in enumerate(self.layers[:-1]):
            kind = layer[0]
            if kind not in LAYER_KINDS or kind == "softmax":
                raise ValueError(f"layer {pos}: unexpected kind {kind!r}")
            if kind == "conv":
                if len(shape) != 3:
                    raise ValueError(f"layer {pos}: conv after flattening")
                shape = (shape[0], shape[1], int(layer[1]))
            elif kind == "pool":
                if len(shape) != 3:
                    raise ValueError(f"layer {pos}: pool after flattening")
                shape = (-(-shape[0] // 2), -(-shape[1] // 2), shape[2])
            elif kind == "fc":
                shape = (int(layer[1]),)
            elif kind == "dropout":
                if not 0.0 <= float(layer[1]) < 1.0:
                    raise ValueError(f"layer {pos}: dropout rate {layer[1]} outside [0, 1)")
            out.append(shape)
        if len(shape) != 1:
            raise ValueError("the network must end in a fully connected layer before softmax")
        return out

    def to_dict(self) -> dict:
        return {"input_shape": list(self.input_shape), "layers": [list(layer) for layer in self.layers]}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(tuple(d["input_shape"]), tuple(tuple(layer) for layer in d["layers"]))


def conv_net_spec(
    n_classes: int,
    input_shape=(28, 28, 3),
    channels=(64, 96, 96, 128, 128, 192),
    fc_units: int = 512,
    dropout=(0.4, 0.3),
) -> NetworkSpec:
    """Three (BN-conv-ReLU, BN-conv-ReLU, pool) stages, then BN, two dropout-guarded FC layers."""
    if len(channels) != 6:
        raise ValueError("six convolution widths expected")
    layers = []
    for stage in range(3):
        for c in channels[2 * stage : 2 * stage + 2]:
            layers += [("bn",), ("conv", c), ("relu",)]
        layers.append(("pool",))
    layers += [
        ("bn",),
        ("dropout", dropout[0]),
        ("fc", fc_units),
        ("relu",),
        ("dropout", dropout[1]),
        ("fc", n_classes),
        ("softmax",),
    ]
    return NetworkSpec(tuple(input_shape), tuple(layers))


def full_spec(n_classes: int = 10, input_shape=(28, 28, 3)) -> NetworkSpec:
    return conv_net_spec(n_classes, input_shape)


def reduced_spec(n_classes: int = 10, input_shape=(28, 28, 3)) -> NetworkSpec:
    """Desk-scale variant of :func:`full_spec` with roughly 1/4 the widths."""
    return conv_net_spec(n_classes, input_shape, channels=(16, 24, 24, 32, 32, 48), fc_units=128)


def tiny_spec(n_classes: int = 3, input_shape=(4, 4, 3), width: int = 4, dropout=(0.4, 0.3)) -> NetworkSpec:
    """Same topology shrunk for finite-difference checks."""
    chans = tuple(min(8, width + k) for k in (0, 1, 1, 2, 2, 3))
    return conv_net_spec(n_classes, input_shape, channels=chans, fc_units=8, dropout=dropout)


def spec_by_name(name: str, n_classes: int, input_shape) -> NetworkSpec:
    builders = {"full": full_spec, "reduced": reduced_spec}
    if name not in builders:
        raise ValueError(f"unknown network {name!r}; choose from {sorted(builders)}")
    return builders[name](n_classes, input_shape)


# --------------------------------------------------------------------------


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def loss_xent_soft(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy against soft targets and its gradient w.r.t. logits."""
    if logits.shape != targets.shape:
        raise ValueError(f"logits {logits.shape} and targets {targets.shape} differ")
    logp = log_softmax(logits)
    n = len(logits)
    loss = float(-(targets * logp).sum() / n)
    grad = (np.exp(logp) * targets.sum(axis=1, keepdims=True) - targets) / n
    return loss, grad.astype(logits.dtype, copy=False)


def predict(logits: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, so ties go to the lowest class id
    return logits.argmax(axis=1)


class Network:
    def __init__(self, spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32,
                 bn_momentum: float = 0.9):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.layers: list[Layer] = []
        shape = spec.input_shape
        for layer, out_shape in zip(spec.layers[:-1], spec.shapes()):
            kind = layer[0]
            if kind == "conv":
                self.layers.append(Conv3x3(shape[-1], out_shape[-1], rng, self.dtype))
            elif kind == "fc":
                self.layers.append(FullyConnected(int(np.prod(shape)), out_shape[0], rng, self.dtype))
            elif kind == "bn":
                self.layers.append(BatchNorm(shape[-1], momentum=bn_momentum, dtype=self.dtype))
            elif kind == "relu":
                self.layers.append(ReLU())
            elif kind == "pool":
                self.layers.append(MaxPool2x2())
            elif kind == "dropout":
                self.layers.append(Dropout(float(layer[1])))
            shape = out_shape

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.params.items()}

    def named_grads(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.grads.items()}

    def n_params(self) -> int:
        return sum(v.size for v in self.named_params().values())

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None = None,
                return_shapes: bool = False):
        """Logits for a batch; training mode caches what backward needs."""
        if x.shape[1:] != self.spec.input_shape:
            raise ValueError(f"batch of shape {x.shape[1:]} does not match input {self.spec.input_shape}")
        h = x.astype(self.dtype, copy=False)
        shapes = []
        for layer in self.layers:
            if not train:
                layer.clear_cache()
            h = layer.forward(h, train, rng)
            shapes.append(h.shape[1:])
        return (h, shapes) if return_shapes else h

    def backward(self, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        g = dlogits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return self.named_grads()

    def clear_caches(self):
        for layer in self.layers:
            layer.clear_cache()

    def nonsmooth_signature(self) -> bytes:
        return b"".join(np.ascontiguousarray(a).tobytes()
                        for layer in self.layers for a in layer.nonsmooth_state())

    def batchnorm_layers(self) -> list[tuple[int, BatchNorm]]:
        return [(i, layer) for i, layer in enumerate(self.layers) if isinstance(layer, BatchNorm)]

    def buffers(self) -> dict[str, np.ndarray]:
        """Non-trainable state (batch-norm running statistics)."""
        out = {}
        for i, bn in self.batchnorm_layers():
            out[f"{i}.running_mean"] = bn.running_mean
            out[f"{i}.running_var"] = bn.running_var
        return out

    def set_buffers(self, buffers: dict[str, np.ndarray]):
        for i, bn in self.batchnorm_layers():
            bn.running_mean = np.array(buffers[f"{i}.running_mean"], dtype=self.dtype)
            bn.running_var = np.array(buffers[f"{i}.running_var"], dtype=self.dtype)

    def train_step(self, x, targets, rng):
        logits = self.forward(x, train=True, rng=rng)
        loss, dlogits = loss_xent_soft(logits, targets.astype(self.dtype, copy=False))
        self.backward(dlogits)
        return loss, logits
