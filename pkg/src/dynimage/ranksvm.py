"""Exact rank pooling by subgradient descent on the pairwise RankSVM objective.

    E(d) = lam/2 ||d||^2 + 2/(T(T-1)) * sum_{q>t} max(0, 1 - <d, V_q> + <d, V_t>)

with ``V_t`` the flattened prefix mean of the first ``t`` slices. At ``d = 0``
every hinge is active and the loss part of the subgradient is
``-2/(T(T-1)) * sum_t (2t - T - 1) V_t``, so one step of size ``T(T-1)/2``
from zero lands exactly on the approximate dynamic image.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Volume3D
from .errors import DimensionMismatch, InvalidDepth, NegativeLambda
from .rankpool import _running_means

__all__ = [
    "DEFAULT_LAMBDA",
    "RankSvmProblem",
    "RankSvmSolution",
    "build_problem",
    "scores",
    "objective",
    "subgradient",
    "suggest_step0",
    "solve",
]

DEFAULT_LAMBDA = 1e-3


@dataclass(frozen=True, eq=False)
class RankSvmProblem:
    """``features`` is a ``(T, m)`` float64 matrix whose row ``t-1`` is ``V_t``."""

    features: np.ndarray
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        f = np.array(self.features, dtype=np.float64, copy=True)
        if f.ndim != 2:
            raise DimensionMismatch(f"features must be a (T, m) matrix, got shape {f.shape}")
        if f.shape[0] < 2:
            raise InvalidDepth(f"rank pooling needs T >= 2 frames, got {f.shape[0]}")
        if f.shape[1] < 1:
            raise DimensionMismatch("feature dimension must be positive")
        if not np.isfinite(f).all():
            raise ValueError("features contain NaN or Inf")
        if not (self.lam >= 0):
            raise NegativeLambda(f"lambda must be >= 0, got {self.lam}")
        f.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def depth(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def pair_scale(self) -> float:
        T = self.depth
        return 2.0 / (T * (T - 1))


@dataclass(frozen=True, eq=False)
class RankSvmSolution:
    d: np.ndarray
    objective: float
    objective_trace: np.ndarray
    initial_objective: float
    iterations: int
    best_iteration: int
    step_schedule: str = field(default="step0/sqrt(k)")

    @property
    def best_so_far(self) -> np.ndarray:
        """Running minimum of ``objective_trace``."""
        return np.minimum.accumulate(self.objective_trace)

    def plane(self, height: int, width: int) -> np.ndarray:
        return self.d.reshape(height, width)


def build_problem(v: Volume3D, lam: float = DEFAULT_LAMBDA) -> RankSvmProblem:
    if v.depth < 2:
        raise InvalidDepth(f"rank pooling needs depth >= 2, got {v.depth}")
    if not (lam >= 0):
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    feats = np.stack([m.reshape(-1) for m in _running_means(v)])
    return RankSvmProblem(feats, lam)


def _as_weights(d, p: RankSvmProblem) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    if d.shape[0] != p.dim:
        raise DimensionMismatch(f"weight vector has dimension {d.shape[0]}, problem has {p.dim}")
    return d


def scores(d, p: RankSvmProblem) -> np.ndarray:
    """``S(t|d) = <d, V_t>`` for t = 1..T."""
    return p.features @ _as_weights(d, p)


def _pairs(T: int):
    # all (q, t) with q > t, row-major
    q, t = np.tril_indices(T, k=-1)
    return q, t


def _evaluate(d: np.ndarray, p: RankSvmProblem, pairs) -> tuple[float, np.ndarray]:
    """Objective and subgradient at ``d`` from a single pass over the scores."""
    q, t = pairs
    s = p.features @ d
    args = 1.0 - s[q] + s[t]
    active = args > 0.0
    e = 0.5 * p.lam * float(d @ d) + p.pair_scale * float(args[active].sum())
    # each active pair adds -(V_q - V_t): frame t gains +1, frame q gains -1
    T = p.depth
    counts = np.bincount(t[active], minlength=T) - np.bincount(q[active], minlength=T)
    g = p.lam * d + p.pair_scale * (counts.astype(np.float64) @ p.features)
    return e, g


def objective(d, p: RankSvmProblem) -> float:
    d = _as_weights(d, p)
    return _evaluate(d, p, _pairs(p.depth))[0]


def subgradient(d, p: RankSvmProblem) -> np.ndarray:
    """A subgradient of ``E`` at ``d``.

    A pair contributes ``-(V_q - V_t)`` only when its hinge argument is
    strictly positive; exact ties contribute nothing.
    """
    d = _as_weights(d, p)
    return _evaluate(d, p, _pairs(p.depth))[1]


def suggest_step0(p: RankSvmProblem, radius: Optional[float] = None) -> float:
    """A problem-scaled initial step for :func:`solve`.

    Without ``radius``: ``1/L`` with ``L = lam + 2/(T(T-1)) * sum_{q>t} ||V_q - V_t||^2``.
    ``L`` bounds how fast the objective can bend along the pair differences;
    it keeps the first steps from overshooting on widely spread features
    without stalling on nearly collinear ones.

    With ``radius = R``: ``R/G``, the classical choice when the minimiser is
    known to lie within distance ``R`` of the origin and ``G`` bounds the
    subgradient norm there. Here ``G = lam*R + 2/(T(T-1)) * sqrt(P * S)``
    with ``P`` the pair count and ``S`` the summed squared pair distances
    (Cauchy-Schwarz on the hinge term). Prefer it when ``lam`` is small and
    the minimiser sits far from zero; the ``1/L`` step can then take many
    thousands of iterations to travel there.

    Falls back to 1.0 when every feature row is identical and ``lam == 0``.
    """
    F = p.features
    # sum over pairs of squared distances, without forming the T^2 differences
    energy = p.depth * float(np.einsum("ij,ij->", F, F))
    spread = energy - float(np.sum(F.sum(axis=0) ** 2))
    if spread <= 1e-12 * energy:
        spread = 0.0
    if radius is None:
        L = p.lam + p.pair_scale * spread
        return 1.0 / L if L > 0 else 1.0
    if not (radius > 0):
        raise ValueError(f"radius must be positive, got {radius}")
    n_pairs = p.depth * (p.depth - 1) / 2
    G = p.lam * radius + p.pair_scale * math.sqrt(n_pairs * spread)
    return radius / G if G > 0 else 1.0


def solve(p: RankSvmProblem, iterations: int = 500, step0: float = 1.0) -> RankSvmSolution:
    """Deterministic subgradient descent from ``d_0 = 0``.

    Iteration ``k`` (1-based) applies ``d_k = d_{k-1} - step0/sqrt(k) * g(d_{k-1})``
    and records ``E(d_k)``. The returned weights are the best iterate among
    ``d_1..d_K``, not necessarily the last.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if not (step0 > 0):
        raise ValueError(f"step0 must be positive, got {step0}")
    pairs = _pairs(p.depth)
    d = np.zeros(p.dim, dtype=np.float64)
    initial, g = _evaluate(d, p, pairs)
    trace = np.empty(iterations, dtype=np.float64)
    best_d, best_e, best_k = None, math.inf, 0
    for k in range(1, iterations + 1):
        d = d - (step0 / math.sqrt(k)) * g
        e, g = _evaluate(d, p, pairs)
        trace[k - 1] = e
        if e < best_e:
            best_d, best_e, best_k = d, e, k
    trace.setflags(write=False)
    return RankSvmSolution(
        d=best_d,
        objective=best_e,
        objective_trace=trace,
        initial_objective=initial,
        iterations=iterations,
        best_iteration=best_k,
    )
