"""Summary statistics for comparing dynamic images (e.g. with vs. without skull)."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from typing import Iterable, TextIO

import numpy as np

__all__ = ["StatsReport", "HIST_BINS", "image_stats", "histogram_entropy", "gradient_energy", "write_csv"]

HIST_BINS = 256


@dataclass(frozen=True)
class StatsReport:
    path: str
    min: float
    max: float
    mean: float
    std: float
    gradient_energy: float
    entropy_bits: float
    error: str = ""


def histogram_entropy(values: np.ndarray, bins: int = HIST_BINS) -> float:
    """Shannon entropy in bits of the min-max normalised ``bins``-bin histogram."""
    x = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = x.min(), x.max()
    if hi == lo:
        return 0.0
    idx = np.minimum(((x - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    p = np.bincount(idx, minlength=bins) / x.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def gradient_energy(values: np.ndarray, axes=None) -> float:
    """Sum over ``axes`` (default all) of the mean squared forward difference.

    Sharper images score higher; an axis of extent 1 contributes nothing.
    """
    x = np.asarray(values, dtype=np.float64)
    total = 0.0
    for axis in range(x.ndim) if axes is None else axes:
        if x.shape[axis] > 1:
            total += float(np.mean(np.diff(x, axis=axis) ** 2))
    return total


def image_stats(values: np.ndarray, path: str = "", axes=None) -> StatsReport:
    """Statistics of an image or volume; ``axes`` selects the gradient axes."""
    x = np.asarray(values, dtype=np.float64)
    mean = float(x.mean())
    return StatsReport(
        path=path,
        min=float(x.min()),
        max=float(x.max()),
        # clamp: rounding can leave the mean a hair outside [min, max]
        mean=min(max(mean, float(x.min())), float(x.max())),
        std=float(x.std()),
        gradient_energy=gradient_energy(x, axes),
        entropy_bits=histogram_entropy(x),
    )


def write_csv(rows: Iterable[StatsReport], out: TextIO) -> None:
    names = [f.name for f in fields(StatsReport)]
    writer = csv.DictWriter(out, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        d = asdict(row)
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in d.items()})
