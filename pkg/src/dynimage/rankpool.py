"""Approximate rank pooling along the depth axis, plus avg/max baselines.

The dynamic image of a stack ``I_1..I_T`` is ``sum_t alpha_t * psi_t`` where
``psi_t`` is the mean of the first ``t`` slices and ``alpha_t = 2t - T - 1``.

Swapping the two sums gives one weight per raw slice,

    beta_tau = sum_{t >= tau} alpha_t / t,

so the same image is ``sum_tau beta_tau * I_tau``, computable in one sweep
without materialising the prefix means. Both routes are kept: ``TWO_PASS``
follows the definition literally and serves as the reference for the
default ``SINGLE_PASS``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .core import (
    ChannelMode,
    DynamicImage,
    MultiChannelImage,
    Normalization,
    Plane2D,
    PoolMethod,
    Volume3D,
)
from .errors import InvalidDepth

__all__ = [
    "Strategy",
    "DegenerateDepthWarning",
    "PoolCoefficients",
    "pool_coefficients",
    "temporal_averages",
    "rank_pool_accumulate",
    "approx_rank_pool",
    "avg_pool_depth",
    "max_pool_depth",
    "normalize_min_max",
    "normalize_channels",
    "segment_bounds",
    "to_three_channel",
]


class Strategy(str, enum.Enum):
    TWO_PASS = "two-pass"
    SINGLE_PASS = "single-pass"


class DegenerateDepthWarning(RuntimeWarning):
    """A depth-1 volume was rank pooled; the result is identically zero."""


@dataclass(frozen=True, eq=False)
class PoolCoefficients:
    depth: int
    alpha: np.ndarray  # int64, alpha[t-1] = 2t - T - 1
    beta: np.ndarray   # float64 single-pass slice weights


def pool_coefficients(depth: int) -> PoolCoefficients:
    if depth < 1:
        raise InvalidDepth(f"depth must be >= 1, got {depth}")
    t = np.arange(1, depth + 1, dtype=np.int64)
    alpha = 2 * t - depth - 1
    # reverse cumulative sum of alpha_t / t
    beta = np.cumsum((alpha / t)[::-1])[::-1].copy()
    alpha.setflags(write=False)
    beta.setflags(write=False)
    return PoolCoefficients(depth=depth, alpha=alpha, beta=beta)


def _check_depth(v: Volume3D) -> None:
    if v.depth < 1:
        raise InvalidDepth(f"volume depth must be >= 1, got {v.depth}")


def _running_means(v: Volume3D):
    """Yield float64 prefix means psi_1..psi_T."""
    acc = np.zeros(v.shape[1:], dtype=np.float64)
    for k in range(v.depth):
        acc += v.voxels[k]
        yield acc / (k + 1)


def temporal_averages(v: Volume3D) -> List[Plane2D]:
    """Prefix means of the slices: element ``t-1`` is the mean of slices 1..t."""
    _check_depth(v)
    return [Plane2D(m) for m in _running_means(v)]


def rank_pool_accumulate(v: Volume3D, strategy: Strategy | str = Strategy.SINGLE_PASS) -> np.ndarray:
    """The un-normalised dynamic image as a float64 ``(H, W)`` array.

    This is the accumulator behind :func:`approx_rank_pool` before its single
    rounding to float32. Use it when comparing images whose magnitude makes
    one float32 ulp exceed the tolerance of interest.
    """
    strategy = Strategy(strategy)
    _check_depth(v)
    coef = pool_coefficients(v.depth)
    acc = np.zeros(v.shape[1:], dtype=np.float64)
    if strategy is Strategy.TWO_PASS:
        for a, psi in zip(coef.alpha, _running_means(v)):
            acc += a * psi
    else:
        tmp = np.empty(v.shape[1:], dtype=np.float64)
        for b, sl in zip(coef.beta, v.voxels):
            np.multiply(sl, b, out=tmp)
            acc += tmp
    return acc


def approx_rank_pool(v: Volume3D, strategy: Strategy | str = Strategy.SINGLE_PASS) -> DynamicImage:
    """Collapse the depth axis into a dynamic image.

    A depth-1 volume gives the all-zero plane (``alpha_1 = 0``) and emits a
    :class:`DegenerateDepthWarning` instead of failing.
    """
    strategy = Strategy(strategy)
    _check_depth(v)
    if v.depth == 1:
        warnings.warn("depth-1 volume: approximate rank pooling yields a zero image",
                      DegenerateDepthWarning, stacklevel=2)
    return DynamicImage(Plane2D(rank_pool_accumulate(v, strategy)), PoolMethod.APPROX_RANK_POOL, v.depth)


def avg_pool_depth(v: Volume3D) -> DynamicImage:
    _check_depth(v)
    acc = np.zeros(v.shape[1:], dtype=np.float64)
    for sl in v.voxels:
        acc += sl
    return DynamicImage(Plane2D(acc / v.depth), PoolMethod.AVG_POOL, v.depth)


def max_pool_depth(v: Volume3D) -> DynamicImage:
    _check_depth(v)
    return DynamicImage(Plane2D(v.voxels.max(axis=0)), PoolMethod.MAX_POOL, v.depth)


def _minmax01(values: np.ndarray) -> np.ndarray:
    x = values.astype(np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    out = (x - lo) / (hi - lo)
    # float32 rounding can push the endpoints a hair outside [0, 1]
    return np.clip(out.astype(np.float32), 0.0, 1.0)


def normalize_min_max(img: DynamicImage) -> DynamicImage:
    """Affinely map ``[min, max]`` onto ``[0, 1]``; a constant plane becomes zeros."""
    return DynamicImage(
        Plane2D(_minmax01(img.values)),
        img.method,
        img.depth_used,
        Normalization.MINMAX01,
        img.channel_mode,
    )


def normalize_channels(img: MultiChannelImage) -> MultiChannelImage:
    """Min-max normalise each channel independently."""
    return MultiChannelImage(np.stack([_minmax01(ch) for ch in img.values]))


def segment_bounds(depth: int, parts: int = 3):
    """Split ``0..depth`` into ``parts`` contiguous ranges; earlier ranges take the remainder."""
    if depth < parts:
        raise InvalidDepth(f"cannot split depth {depth} into {parts} non-empty segments")
    base, extra = divmod(depth, parts)
    bounds, start = [], 0
    for k in range(parts):
        stop = start + base + (1 if k < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


_POOLERS = {
    PoolMethod.APPROX_RANK_POOL: approx_rank_pool,
    PoolMethod.AVG_POOL: avg_pool_depth,
    PoolMethod.MAX_POOL: max_pool_depth,
}


def to_three_channel(
    img: DynamicImage,
    v: Volume3D,
    mode: ChannelMode | str,
    pool: Optional[Callable[[Volume3D], DynamicImage]] = None,
) -> MultiChannelImage:
    """Expand a dynamic image of ``v`` to three channels.

    ``Replicate3`` copies ``img`` into every channel. ``Segment3`` splits the
    depth range of ``v`` into three contiguous segments and pools each one
    with ``img.method`` (or ``pool`` when given, which is required for
    ``ExactRankPool``). If ``img`` is min-max normalised, so is each segment.
    """
    mode = ChannelMode(mode)
    if img.plane.shape != v.shape[1:]:
        raise ValueError(f"image shape {img.plane.shape} does not match volume slices {v.shape[1:]}")
    if mode is ChannelMode.REPLICATE3:
        return MultiChannelImage(np.stack([img.values] * 3))
    if mode is not ChannelMode.SEGMENT3:
        raise ValueError(f"unsupported three-channel mode {mode}")

    if pool is None:
        try:
            pool = _POOLERS[img.method]
        except KeyError:
            raise ValueError(f"no default segment pooler for {img.method.value}; pass pool=") from None
    channels = []
    for start, stop in segment_bounds(v.depth):
        seg = Volume3D(v.voxels[start:stop], spacing=v.spacing)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDepthWarning)
            out = pool(seg)
        if img.normalization is Normalization.MINMAX01:
            out = normalize_min_max(out)
        channels.append(out.values)
    return MultiChannelImage(np.stack(channels))
