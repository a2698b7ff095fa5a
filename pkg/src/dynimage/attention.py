"""Spatial attention block and binary cross-entropy, as plain numpy numerics.

The block maps a feature map ``A`` of shape ``(H, W, C)`` through four
1x1 convolutions (per-pixel affine maps) with channel widths
``C -> C//2 -> C//4 -> C//8 -> 1`` (each at least 1). ReLU follows the first
three layers; the single-channel logits go through a softmax over all
``H*W`` positions to give the mask ``S``, and the output is ``A * S``
broadcast over channels.

Everything runs in float64 so the analytic backward pass can be checked
against central finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ChannelMismatch, InvalidLabel, InvalidProbability, NonFiniteValue, ShapeMismatch

__all__ = [
    "BCE_EPS",
    "FeatureMap",
    "AttentionParams",
    "AttentionOutput",
    "layer_widths",
    "init_params",
    "attention_forward",
    "attention_backward",
    "bce_loss",
]

BCE_EPS = 1e-7


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Feature map with ``values`` of shape ``(H, W, C)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3 or min(v.shape) < 1:
            raise ShapeMismatch(f"feature map must be (H, W, C) with positive extents, got {v.shape}")
        if not np.isfinite(v).all():
            raise NonFiniteValue("feature map contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class AttentionParams:
    """Four ``(weight, bias)`` pairs; ``weight`` is ``(in_channels, out_channels)``."""

    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64).reshape(-1) for b in self.biases)
        if len(ws) != 4 or len(bs) != 4:
            raise ShapeMismatch("attention block needs exactly four layers")
        for k, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeMismatch(f"layer {k + 1}: weight {w.shape} and bias {b.shape} disagree")
            if k and w.shape[0] != ws[k - 1].shape[1]:
                raise ShapeMismatch(f"layer {k + 1} expects {w.shape[0]} inputs, previous layer gives {ws[k - 1].shape[1]}")
        if ws[-1].shape[1] != 1:
            raise ShapeMismatch("last layer must produce a single channel")
        for a in ws + bs:
            a.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def in_channels(self) -> int:
        return self.weights[0].shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def with_flat(self, vec: np.ndarray) -> "AttentionParams":
        """Inverse of :meth:`flat`: same shapes, new values."""
        vec = np.asarray(vec, dtype=np.float64)
        ws, bs, i = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(vec[i:i + w.size].reshape(w.shape))
            i += w.size
            bs.append(vec[i:i + b.size])
            i += b.size
        return AttentionParams(tuple(ws), tuple(bs))


@dataclass(frozen=True, eq=False)
class AttentionOutput:
    mask: np.ndarray    # (H, W), positive, sums to 1
    output: np.ndarray  # (H, W, C)


def layer_widths(channels: int) -> List[int]:
    """Channel widths through the block, input first: ``[C, C//2, C//4, C//8, 1]``."""
    if channels < 1:
        raise ValueError(f"channels must be positive, got {channels}")
    return [channels] + [max(1, channels // f) for f in (2, 4, 8)] + [1]


def init_params(channels: int, seed: int = 0) -> AttentionParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases from a seeded generator."""
    rng = np.random.default_rng(seed)
    widths = layer_widths(channels)
    ws, bs = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return AttentionParams(tuple(ws), tuple(bs))


def _as_map(A) -> np.ndarray:
    return A.values if isinstance(A, FeatureMap) else FeatureMap(A).values


def _forward(A: np.ndarray, p: AttentionParams):
    H, W, C = A.shape
    if C != p.in_channels:
        raise ChannelMismatch(f"input has {C} channels, first layer expects {p.in_channels}")
    x = A.reshape(H * W, C)
    pre = []  # pre-activations of each layer, (H*W, out)
    acts = [x]
    for k, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = acts[-1] @ w + b
        pre.append(z)
        if k < 3:
            acts.append(np.maximum(z, 0.0))
    logits = pre[-1][:, 0]
    e = np.exp(logits - logits.max())
    s = e / e.sum()
    return s, pre, acts


def attention_forward(A, p: AttentionParams) -> AttentionOutput:
    A = _as_map(A)
    H, W, _ = A.shape
    s, _, _ = _forward(A, p)
    mask = s.reshape(H, W)
    return AttentionOutput(mask=mask, output=A * mask[:, :, None])


def attention_backward(A, p: AttentionParams, grad_output) -> Tuple[np.ndarray, AttentionParams]:
    """Reverse-mode gradients of a scalar loss through the block.

    Returns ``(dL/dA, dL/dparams)`` where the parameter gradient reuses the
    :class:`AttentionParams` layout.
    """
    A = _as_map(A)
    H, W, C = A.shape
    g_out = np.asarray(grad_output, dtype=np.float64)
    if g_out.shape != A.shape:
        raise ShapeMismatch(f"upstream gradient {g_out.shape} does not match input {A.shape}")
    s, pre, acts = _forward(A, p)
    x = A.reshape(H * W, C)
    g = g_out.reshape(H * W, C)

    grad_x = g * s[:, None]
    grad_s = (g * x).sum(axis=1)
    # softmax Jacobian-vector product
    grad_z = (s * (grad_s - float(s @ grad_s)))[:, None]

    grad_w, grad_b = [None] * 4, [None] * 4
    for k in range(3, -1, -1):
        if k < 3:
            grad_z = grad_z * (pre[k] > 0.0)
        grad_w[k] = acts[k].T @ grad_z
        grad_b[k] = grad_z.sum(axis=0)
        grad_z = grad_z @ p.weights[k].T
    grad_x = grad_x + grad_z
    return grad_x.reshape(H, W, C), AttentionParams(tuple(grad_w), tuple(grad_b))


def bce_loss(prob: float, label) -> float:
    """``-[l log p + (1 - l) log(1 - p)]`` with ``p`` clamped to ``[eps, 1 - eps]``."""
    if label not in (0, 1):
        raise InvalidLabel(f"label must be 0 or 1, got {label!r}")
    prob = float(prob)
    if not 0.0 <= prob <= 1.0:
        raise InvalidProbability(f"probability must lie in [0, 1], got {prob}")
    prob = min(max(prob, BCE_EPS), 1.0 - BCE_EPS)
    return -math.log(prob) if label == 1 else -math.log1p(-prob)
