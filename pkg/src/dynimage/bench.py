"""Conversion throughput of the pooling methods on synthetic volumes."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Dict, Iterable, List, Sequence, TextIO, Tuple

import numpy as np

from .core import Volume3D
from .errors import ConfigError
from .rankpool import Strategy, approx_rank_pool, avg_pool_depth, max_pool_depth

__all__ = ["BENCH_METHODS", "BenchRow", "parse_size", "run_bench", "write_csv"]

BENCH_METHODS: Dict[str, Callable[[Volume3D], object]] = {
    "single-pass": lambda v: approx_rank_pool(v, Strategy.SINGLE_PASS),
    "two-pass": lambda v: approx_rank_pool(v, Strategy.TWO_PASS),
    "avg": avg_pool_depth,
    "max": max_pool_depth,
}


@dataclass(frozen=True)
class BenchRow:
    width: int
    height: int
    depth: int
    method: str
    repeats: int
    median_s: float
    min_s: float
    voxels_per_s: float


def parse_size(text: str) -> Tuple[int, int, int]:
    """``"110"`` -> cube, ``"WxHxD"`` -> explicit extents."""
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad volume size {text!r}; use N or WxHxD") from None
    if len(dims) == 1:
        dims *= 3
    if len(dims) != 3 or min(dims) < 1:
        raise ConfigError(f"bad volume size {text!r}; use N or WxHxD with positive extents")
    return tuple(dims)


def run_bench(sizes: Sequence[str], repeats: int = 5, seed: int = 0) -> List[BenchRow]:
    """Time every method on a seeded random volume of each size.

    One untimed warm-up call precedes the ``repeats`` timed calls; the
    report keeps the median.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    if not sizes:
        raise ConfigError("no volume sizes given")
    rng = np.random.default_rng(seed)
    rows = []
    for text in sizes:
        w, h, d = parse_size(text)
        vol = Volume3D(rng.uniform(0.0, 1.0, size=(d, h, w)).astype(np.float32))
        for name, fn in BENCH_METHODS.items():
            fn(vol)
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                fn(vol)
                times.append(time.perf_counter() - t0)
            med = statistics.median(times)
            rows.append(BenchRow(w, h, d, name, repeats, med, min(times), vol.size / med if med > 0 else float("inf")))
    return rows


def write_csv(rows: Iterable[BenchRow], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=[f.name for f in fields(BenchRow)], lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(asdict(r))
