"""Fully connected networks with hand-written backpropagation, plus Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

OUTPUT_ACTIVATIONS = ("tanh", "linear")


class ShapeError(ValueError):
    pass


@dataclass
class Mlp:
    """
    Rectifier hidden layers followed by a ``tanh`` or linear output.

    ``weights[i]`` has shape ``(sizes[i], sizes[i + 1])`` so a batch of row
    vectors is transformed as ``x @ W + b``.
    """

    sizes: tuple[int, ...]
    weights: list[Array]
    biases: list[Array]
    output_activation: str = "linear"

    def __post_init__(self) -> None:
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2:
            raise ShapeError("an MLP needs at least an input and an output size")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output activation must be one of {OUTPUT_ACTIVATIONS}")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ShapeError(f"layer {i} parameter shapes do not chain")

    @classmethod
    def init(cls, sizes, output_activation: str, rng: np.random.Generator,
             final_scale: float = 1.0) -> "Mlp":
        """Uniform fan-in initialisation; the last layer is shrunk by ``final_scale``."""
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if i == len(sizes) - 2:
                bound *= final_scale
            weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, fan_out))
        return cls(tuple(sizes), weights, biases, output_activation)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[Array]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.output_activation)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())


@dataclass
class ForwardCache:
    inputs: list[Array]
    output: Array
    squeeze: bool


def _as_batch(net: Mlp, x) -> tuple[Array, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.sizes[0]:
        raise ShapeError(f"expected input of width {net.sizes[0]}, got shape {x.shape}")
    return x, squeeze


def forward_with_cache(net: Mlp, x) -> ForwardCache:
    h, squeeze = _as_batch(net, x)
    inputs = []
    last = net.n_layers - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        elif net.output_activation == "tanh":
            h = np.tanh(h)
    return ForwardCache(inputs, h, squeeze)


def mlp_forward(net: Mlp, x) -> Array:
    """Evaluate the network on one vector or a batch of row vectors."""
    cache = forward_with_cache(net, x)
    return cache.output[0] if cache.squeeze else cache.output


def backward(net: Mlp, cache: ForwardCache, upstream, pre_upstream=None) -> tuple[list[Array], Array]:
    """
    Reverse pass for ``sum(output * upstream)``.

    ``pre_upstream``, when given, is an extra gradient with respect to the
    output layer's pre-activation (before ``tanh``).  Returns gradients in
    :meth:`Mlp.params` order and the input gradient.  Batch contributions
    are summed.
    """
    g = np.asarray(upstream, dtype=np.float64)
    if cache.squeeze and g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.output.shape:
        raise ShapeError(f"upstream gradient shape {g.shape} != output shape {cache.output.shape}")
    if net.output_activation == "tanh":
        g = g * (1.0 - cache.output * cache.output)
    if pre_upstream is not None:
        g = g + np.asarray(pre_upstream, dtype=np.float64).reshape(g.shape)
    grads: list[Array] = [None] * (2 * net.n_layers)  # type: ignore[list-item]
    for i in range(net.n_layers - 1, -1, -1):
        h_in = cache.inputs[i]
        grads[2 * i] = h_in.T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ net.weights[i].T
        if i > 0:
            # rectifier derivative: the stored input to layer i is relu(z)
            g = g * (h_in > 0.0)
    return grads, (g[0] if cache.squeeze else g)


def mlp_gradients(net: Mlp, x, upstream) -> tuple[list[Array], Array]:
    return backward(net, forward_with_cache(net, x), upstream)


@dataclass
class Adam:
    """Adam over a fixed list of parameter arrays, updated in place."""

    params: list[Array]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[Array] = field(default_factory=list)
    v: list[Array] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.params]
        if not self.v:
            self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: list[Array]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)
