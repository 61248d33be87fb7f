"""Minimal feed-forward networks with exact backpropagation.

Parametric layers store their weights and bias together as a single matrix
``theta = [W b]`` (bias in the last column) and multiply it against the
*augmented* input, i.e. the input with a constant 1 appended. Each forward
pass leaves the augmented input rows in ``layer.cache.a_tilde`` so the
optimizer can read activation statistics off the network.

For convolutions the augmented input is the im2col patch matrix plus a
ones column, one row per (sample, output location).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CacheError, DegenerateVarianceError, DimensionError, GeometryError, LabelError
from .tensor import ConvGeometry, _im2col, as_tensor, col2im, conv_geometry

__all__ = [
    "LayerCache",
    "Dense",
    "Conv2d",
    "ReLU",
    "Flatten",
    "Network",
    "parse_layer",
    "init_network",
    "forward",
    "backward",
    "softmax_cross_entropy",
    "activation_variance",
]


@dataclass
class LayerCache:
    a_tilde: np.ndarray  # (rows, fan_in + 1), last column == 1
    z: np.ndarray        # (rows, fan_out)


def _augment(rows: np.ndarray) -> np.ndarray:
    out = np.empty((rows.shape[0], rows.shape[1] + 1))
    out[:, :-1] = rows
    out[:, -1] = 1.0
    return out


class Dense:
    kind = "dense"
    has_params = True

    def __init__(self, fan_in: int, fan_out: int):
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.theta = np.zeros((fan_out, fan_in + 1))
        self.cache: LayerCache | None = None

    def output_shape(self, in_shape):
        return (self.fan_out,)

    def forward(self, x):
        self.cache = None
        a_tilde = _augment(x)
        z = a_tilde @ self.theta.T
        self.cache = LayerCache(a_tilde, z)
        return z

    def backward(self, dz):
        grad = dz.T @ self.cache.a_tilde
        dx = dz @ self.theta[:, :-1]
        return dx, grad


class Conv2d:
    kind = "conv"
    has_params = True

    def __init__(self, geometry: ConvGeometry, out_channels: int):
        self.geometry = geometry
        self.out_channels = out_channels
        self.fan_in = geometry.patch_size
        self.fan_out = out_channels
        self.theta = np.zeros((out_channels, self.fan_in + 1))
        self.cache: LayerCache | None = None

    def output_shape(self, in_shape):
        return (self.out_channels, self.geometry.out_h, self.geometry.out_w)

    def forward(self, x):
        self.cache = None
        g = self.geometry
        a_tilde = _augment(_im2col(x, g))
        z = a_tilde @ self.theta.T
        self.cache = LayerCache(a_tilde, z)
        return np.ascontiguousarray(
            z.reshape(x.shape[0], g.out_h, g.out_w, self.out_channels).transpose(0, 3, 1, 2))

    def backward(self, dout):
        rows = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        grad = rows.T @ self.cache.a_tilde
        dcols = rows @ self.theta[:, :-1]
        return col2im(dcols, self.geometry), grad


class ReLU:
    kind = "relu"
    has_params = False
    theta = None
    cache = None

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0.0), None


class Flatten:
    kind = "flatten"
    has_params = False
    theta = None
    cache = None

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._in_shape), None


def parse_layer(item) -> tuple:
    """Normalise a layer description to a tuple.

    Accepts tuples such as ``("dense", 64)`` / ``("conv", 6, 5, 1, 2)`` or the
    equivalent strings ``"dense:64"`` / ``"conv:6:5:1:2"`` (out channels,
    kernel, stride, padding). ``"relu"`` and ``"flatten"`` take no arguments.
    """
    if isinstance(item, str):
        head, *rest = item.strip().split(":")
        try:
            item = (head, *(int(r) for r in rest))
        except ValueError:
            raise GeometryError(f"bad layer description {item!r}") from None
    kind, *args = item
    arity = {"dense": (1, 1), "conv": (2, 4), "relu": (0, 0), "flatten": (0, 0)}
    if kind not in arity:
        raise GeometryError(f"unknown layer kind {kind!r}")
    lo, hi = arity[kind]
    if not lo <= len(args) <= hi:
        raise GeometryError(f"layer {kind!r} takes {lo}..{hi} integer arguments, got {args}")
    if kind == "conv":
        args = list(args) + [1, 0][len(args) - 2:]
    return (kind, *args)


class Network:
    """An ordered stack of layers applied to inputs of shape ``input_shape``."""

    def __init__(self, layers: Sequence, input_shape: tuple[int, ...]):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self._batch = None

    @property
    def params(self) -> list:
        return [layer for layer in self.layers if layer.has_params]

    @property
    def thetas(self) -> list[np.ndarray]:
        return [layer.theta for layer in self.params]

    @property
    def caches(self) -> list[LayerCache | None]:
        return [layer.cache for layer in self.params]

    @property
    def num_classes(self) -> int:
        return self.params[-1].fan_out

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        dims = int(np.prod(self.input_shape))
        if x.ndim < 2 or int(np.prod(x.shape[1:])) != dims:
            raise DimensionError(
                f"layer 0: input shape {x.shape} does not match network input {self.input_shape}")
        self._batch = None
        h = x.reshape((x.shape[0],) + self.input_shape)
        for i, layer in enumerate(self.layers):
            if layer.kind == "dense" and h.ndim != 2:
                raise DimensionError(f"layer {i}: dense layer received shape {h.shape}")
            if layer.kind == "dense" and h.shape[1] != layer.fan_in:
                raise DimensionError(
                    f"layer {i}: expected fan-in {layer.fan_in}, got shape {h.shape}")
            h = layer.forward(h)
        self._batch = x.shape[0]
        return h

    def backward(self, logits: np.ndarray, labels) -> tuple[float, list[np.ndarray]]:
        if self._batch is None or any(c is None for c in self.caches):
            raise CacheError("backward called without a completed forward pass")
        if logits.shape[0] != self._batch:
            raise CacheError(
                f"logits batch {logits.shape[0]} does not match cached batch {self._batch}")
        loss, d = softmax_cross_entropy(logits, labels)
        grads = []
        for layer in reversed(self.layers):
            d, g = layer.backward(d)
            if g is not None:
                grads.append(g)
        grads.reverse()
        return loss, grads

    def predict(self, x: np.ndarray, batch_size: int = 1000) -> np.ndarray:
        out = [self.forward(x[i:i + batch_size]).argmax(axis=1)
               for i in range(0, x.shape[0], batch_size)]
        return np.concatenate(out)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.thetas])

    def set_thetas(self, thetas) -> None:
        for layer, theta in zip(self.params, thetas):
            if theta.shape != layer.theta.shape:
                raise DimensionError(f"theta shape {theta.shape} != {layer.theta.shape}")
            layer.theta = np.array(theta, dtype=np.float64)


def init_network(spec: Sequence, seed: int, input_shape: Sequence[int]) -> Network:
    """Build a network from a layer list and draw its weights.

    Weights are uniform in ``[-sqrt(6/fan_in), sqrt(6/fan_in)]``, biases zero,
    drawn layer by layer from ``numpy.random.default_rng(seed)``.
    """
    layers_desc = [parse_layer(item) for item in spec]
    shape = tuple(int(s) for s in input_shape)
    rng = np.random.default_rng(seed)
    layers = []
    for i, (kind, *args) in enumerate(layers_desc):
        if kind == "dense":
            if len(shape) != 1:
                raise GeometryError(f"layer {i}: dense layer after shape {shape}; add a flatten")
            layer = Dense(shape[0], args[0])
        elif kind == "conv":
            if len(shape) != 3:
                raise GeometryError(f"layer {i}: conv layer needs (C, H, W) input, got {shape}")
            out_c, k, s, p = args
            try:
                geom = conv_geometry(shape[0], shape[1], shape[2], k, s, p)
            except GeometryError as exc:
                raise GeometryError(f"layer {i}: {exc}") from None
            layer = Conv2d(geom, out_c)
        elif kind == "relu":
            layer = ReLU()
        else:
            layer = Flatten()
        if layer.has_params:
            if layer.fan_out < 1:
                raise GeometryError(f"layer {i}: fan-out must be positive")
            bound = np.sqrt(6.0 / layer.fan_in)
            layer.theta[:, :-1] = rng.uniform(-bound, bound, size=(layer.fan_out, layer.fan_in))
        shape = layer.output_shape(shape)
        layers.append(layer)
    if not layers or not layers[-1].has_params or len(shape) != 1:
        raise GeometryError("network must end in a dense layer producing class logits")
    return Network(layers, tuple(int(s) for s in input_shape))


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def backward(net: Network, logits: np.ndarray, labels):
    return net.backward(logits, labels)


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to ``logits``."""
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    b, k = logits.shape
    if labels.shape != (b,) or not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be {b} integer class indices, got {labels.shape} {labels.dtype}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise LabelError(f"label out of range [0, {k})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(b)
    loss = float(np.mean(lse - shifted[rows, labels]))
    probs = np.exp(shifted - lse[:, None])
    probs[rows, labels] -= 1.0
    return loss, probs / b


def activation_variance(cache: LayerCache) -> np.ndarray:
    """Centered per-column variance of the cached augmented inputs.

    Uses the population form (denominator = row count). The final entry is
    the bias column and is therefore always 0.
    """
    if cache is None:
        raise CacheError("layer has no cached activations")
    a = cache.a_tilde
    if a.shape[0] < 2:
        raise DegenerateVarianceError(f"variance needs at least 2 rows, got {a.shape[0]}")
    centered = a - a.sum(axis=0) / a.shape[0]
    return (centered * centered).sum(axis=0) / a.shape[0]
