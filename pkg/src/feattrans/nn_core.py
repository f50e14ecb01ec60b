"""Minimal dense-network machinery with exact manual backpropagation.

Everything is float64 numpy. A LayerStack is a chain of affine layers with
relu/linear activations and an optional final row-wise L2 normalization.
Gradients are computed analytically, including the normalization Jacobian
(I/||x|| - x x^T / ||x||^3), and are validated against central finite
differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_EPS = 1e-12


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "relu"  # "relu" | "linear"

    def __post_init__(self):
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DataError("layer weight/bias shapes inconsistent")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class LayerStack:
    layers: list[DenseLayer]
    final_l2_normalize: bool = False

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise DataError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.in_dim, *(l.out_dim for l in self.layers))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out.append(l.weights)
            out.append(l.bias)
        return out

    def set_parameters(self, params: list[np.ndarray]) -> None:
        assert len(params) == 2 * len(self.layers)
        for i, l in enumerate(self.layers):
            l.weights = np.asarray(params[2 * i], dtype=np.float64)
            l.bias = np.asarray(params[2 * i + 1], dtype=np.float64)

    def copy(self) -> "LayerStack":
        return LayerStack(
            layers=[
                DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
                for l in self.layers
            ],
            final_l2_normalize=self.final_l2_normalize,
        )


def he_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    limit = np.sqrt(6.0 / in_dim)
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


def build_stack(
    dims: tuple[int, ...],
    final_l2_normalize: bool,
    rng: np.random.Generator,
    last_activation: str = "linear",
) -> LayerStack:
    """Dense stack through `dims`; relu on every layer but the last."""
    layers = []
    for k, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
        act = last_activation if k == len(dims) - 2 else "relu"
        layers.append(DenseLayer(he_uniform(rng, d_out, d_in), np.zeros(d_out), act))
    return LayerStack(layers=layers, final_l2_normalize=final_l2_normalize)


@dataclass
class Tape:
    """Cached activations from one forward pass, consumed by backward()."""

    inputs: list[np.ndarray]  # input to each layer
    pre_acts: list[np.ndarray]  # affine outputs before activation
    pre_norm: np.ndarray | None  # stack output before L2 normalization
    norms: np.ndarray | None  # row norms of pre_norm


def forward(stack: LayerStack, batch: np.ndarray) -> tuple[np.ndarray, Tape]:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != stack.in_dim:
        raise DataError(f"batch shape {x.shape} does not match stack input dim {stack.in_dim}")
    inputs, pre_acts = [], []
    for layer in stack.layers:
        inputs.append(x)
        z = x @ layer.weights.T + layer.bias
        pre_acts.append(z)
        x = np.maximum(z, 0.0) if layer.activation == "relu" else z
    pre_norm = norms = None
    if stack.final_l2_normalize:
        pre_norm = x
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x = x / np.maximum(norms, _EPS)
    return x, Tape(inputs=inputs, pre_acts=pre_acts, pre_norm=pre_norm, norms=norms)


def backward(
    stack: LayerStack, tape: Tape, upstream_grad: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact gradients for forward()'s output w.r.t. parameters and input.

    Returns (param_grads ordered as stack.parameters(), input_grad).
    """
    g = np.asarray(upstream_grad, dtype=np.float64)
    if stack.final_l2_normalize:
        if tape.pre_norm is None:
            raise DataError("tape was produced without final normalization")
        n = np.maximum(tape.norms, _EPS)
        y = tape.pre_norm / n
        # d(x/||x||) applied to g: (g - (g.y) y) / ||x||
        g = (g - np.sum(g * y, axis=1, keepdims=True) * y) / n
    param_grads: list[np.ndarray] = [None] * (2 * len(stack.layers))
    for k in range(len(stack.layers) - 1, -1, -1):
        layer = stack.layers[k]
        if g.shape != tape.pre_acts[k].shape:
            raise DataError("stale tape: gradient shape mismatch")
        if layer.activation == "relu":
            g = g * (tape.pre_acts[k] > 0)
        param_grads[2 * k] = g.T @ tape.inputs[k]
        param_grads[2 * k + 1] = g.sum(axis=0)
        g = g @ layer.weights
    return param_grads, g


def euclid_loss(pred: np.ndarray, tgt: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over rows of the (unsquared) Euclidean distance, plus its gradient.

    The gradient at coincident rows is defined as 0 via an epsilon in the
    denominator.
    """
    pred = np.asarray(pred, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if pred.shape != tgt.shape:
        raise DataError(f"shape mismatch {pred.shape} vs {tgt.shape}")
    diff = pred - tgt
    dists = np.linalg.norm(diff, axis=1)
    n = pred.shape[0]
    grad = diff / (dists[:, None] + _EPS) / n
    return float(dists.mean()), grad


@dataclass
class AdamState:
    """Bias-corrected Adam over a flat list of parameter arrays."""

    lr: float
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: list[np.ndarray], lr: float) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> list[np.ndarray]:
    """One in-place Adam update; returns the updated parameter list."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        m_hat = state.m[i] / (1 - b1**t)
        v_hat = state.v[i] / (1 - b2**t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
