"""Batch jobs behind the command line: convert, exact, stats.

Each input file runs through its own sequential pipeline. Files are spread
over a thread pool, but results (and manifest lines) are always emitted in
input order, so outputs do not depend on the worker count. A failing file
produces an error record and never touches other files' outputs.
"""
from __future__ import annotations

import csv
import dataclasses
import glob
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import ChannelMode, DynamicImage, Plane2D, PoolMethod, Volume3D
from .errors import ConfigError
from .imageio import EXTENSIONS, FORMATS, read_image_array, write_image
from .nifti import read_volume
from .rankpool import (
    DegenerateDepthWarning,
    Strategy,
    approx_rank_pool,
    avg_pool_depth,
    max_pool_depth,
    normalize_channels,
    normalize_min_max,
    to_three_channel,
)
from .ranksvm import DEFAULT_LAMBDA, build_problem, solve, suggest_step0
from .stats import StatsReport, image_stats

__all__ = [
    "WORKERS_ENV",
    "METHODS",
    "CHANNEL_MODES",
    "JobConfig",
    "expand_inputs",
    "output_stem",
    "convert_file",
    "run_convert",
    "exact_file",
    "run_exact",
    "stats_file",
    "run_stats",
]

WORKERS_ENV = "DYNIMAGE_WORKERS"
METHODS = ("dynamic", "avg", "max", "exact")
CHANNEL_MODES = {"single": ChannelMode.SINGLE, "replicate3": ChannelMode.REPLICATE3, "segment3": ChannelMode.SEGMENT3}
MANIFEST_NAME = "manifest.jsonl"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from None


@dataclass
class JobConfig:
    inputs: List[str] = field(default_factory=list)
    method: str = "dynamic"
    strategy: str = "single-pass"
    channel_modes: Tuple[str, ...] = ("replicate3",)
    normalize: Optional[bool] = None  # None: on for PNG output, off for raw-f32
    output_dir: str = "."
    output_format: str = "png8"
    lam: float = DEFAULT_LAMBDA
    iterations: int = 500
    step0: Optional[float] = None  # None: ranksvm.suggest_step0
    workers: Optional[int] = None  # None: $DYNIMAGE_WORKERS or 1

    def validated(self) -> "JobConfig":
        """Return a copy with defaults resolved; raise :class:`ConfigError` on bad values."""
        c = dataclasses.replace(self, inputs=list(self.inputs), channel_modes=tuple(self.channel_modes))
        if c.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {c.method!r}")
        try:
            Strategy(c.strategy)
        except ValueError:
            raise ConfigError(f"strategy must be single-pass or two-pass, got {c.strategy!r}") from None
        if not c.channel_modes:
            raise ConfigError("at least one channel mode is required")
        for m in c.channel_modes:
            if m not in CHANNEL_MODES:
                raise ConfigError(f"channel mode must be one of {sorted(CHANNEL_MODES)}, got {m!r}")
        if c.output_format not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}, got {c.output_format!r}")
        is_png = c.output_format.startswith("png")
        if c.normalize is None:
            c.normalize = is_png
        if is_png and not c.normalize:
            raise ConfigError(f"{c.output_format} output requires normalization")
        if not (c.lam >= 0):
            raise ConfigError(f"lambda must be >= 0, got {c.lam}")
        if c.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {c.iterations}")
        if c.step0 is not None and not (c.step0 > 0):
            raise ConfigError(f"step0 must be positive, got {c.step0}")
        if c.workers is None:
            c.workers = default_workers()
        if c.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {c.workers}")
        return c


def expand_inputs(patterns: Iterable[str]) -> List[str]:
    """Expand globs in order; literal paths without matches are kept so they fail per-file."""
    out: List[str] = []
    for pat in patterns:
        matches = sorted(glob.glob(pat)) if glob.has_magic(pat) else []
        out.extend(matches or [pat])
    return out


def output_stem(path: str) -> str:
    name = Path(path).name
    for ext in (".nii.gz", ".nii"):
        if name.endswith(ext):
            return name[: -len(ext)]
    return Path(name).stem


def _check_unique_stems(paths: Sequence[str]) -> None:
    seen = {}
    for p in paths:
        stem = output_stem(p)
        if stem in seen and seen[stem] != p:
            raise ConfigError(f"inputs {seen[stem]} and {p} would write to the same outputs")
        seen[stem] = p


def _map_ordered(fn: Callable, items: Sequence, workers: int):
    if workers == 1 or len(items) <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, items)


# convert

def _exact_pool(cfg: JobConfig) -> Callable[[Volume3D], DynamicImage]:
    def pool(v: Volume3D) -> DynamicImage:
        sol = _solve_volume(v, cfg)
        return DynamicImage(Plane2D(sol.plane(v.height, v.width)), PoolMethod.EXACT_RANK_POOL, v.depth)

    return pool


def _pooler(cfg: JobConfig) -> Callable[[Volume3D], DynamicImage]:
    if cfg.method == "dynamic":
        strategy = Strategy(cfg.strategy)
        return lambda v: approx_rank_pool(v, strategy)
    if cfg.method == "avg":
        return avg_pool_depth
    if cfg.method == "max":
        return max_pool_depth
    return _exact_pool(cfg)


def _error_record(base: dict, exc: Exception, **extra) -> dict:
    return {**base, **extra, "status": "error", "error": f"{type(exc).__name__}: {exc}"}


def convert_file(path: str, cfg: JobConfig) -> List[dict]:
    """Pool one volume and write one image per channel mode; return manifest records.

    Failures never propagate: a bad file yields one error record, a channel
    mode that cannot be produced (e.g. segment3 on depth < 3) yields an error
    record for that mode only.
    """
    started = time.perf_counter()
    base = {"input": path, "method": cfg.method, "strategy": cfg.strategy, "format": cfg.output_format}
    try:
        vol, _ = read_volume(path)
        pool = _pooler(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDepthWarning)
            img = pool(vol)
    except Exception as exc:
        return [_error_record(base, exc, wall_time_s=time.perf_counter() - started)]

    records = []
    for mode_name in cfg.channel_modes:
        mode = CHANNEL_MODES[mode_name]
        try:
            if mode is ChannelMode.SINGLE:
                out_img = normalize_min_max(img) if cfg.normalize else img
                raw = img.values
            else:
                multi = to_three_channel(img, vol, mode, pool=pool)
                out_img = normalize_channels(multi) if cfg.normalize else multi
                raw = multi.values
            out_path = os.path.join(
                cfg.output_dir, f"{output_stem(path)}_{cfg.method}_{mode_name}{EXTENSIONS[cfg.output_format]}"
            )
            write_image(out_path, out_img, cfg.output_format)
            records.append({
                **base,
                "channel_mode": mode_name,
                "status": "ok",
                "depth": vol.depth,
                "shape": list(np.shape(out_img.values)),
                "min": float(raw.min()),
                "max": float(raw.max()),
                "normalized": bool(cfg.normalize),
                "output": out_path,
            })
        except Exception as exc:
            records.append(_error_record(base, exc, channel_mode=mode_name, depth=vol.depth))
    elapsed = time.perf_counter() - started
    for r in records:
        r["wall_time_s"] = elapsed
    return records


def run_convert(cfg: JobConfig) -> Tuple[int, List[dict]]:
    """Convert every input; return ``(exit_status, records)``.

    Records are streamed to ``<output_dir>/manifest.jsonl`` in input order.
    """
    cfg = cfg.validated()
    paths = expand_inputs(cfg.inputs)
    if not paths:
        raise ConfigError("no inputs given")
    _check_unique_stems(paths)
    os.makedirs(cfg.output_dir, exist_ok=True)
    all_records: List[dict] = []
    with open(os.path.join(cfg.output_dir, MANIFEST_NAME), "w") as manifest:
        for records in _map_ordered(lambda p: convert_file(p, cfg), paths, cfg.workers):
            for r in records:
                manifest.write(json.dumps(r, sort_keys=True) + "\n")
            manifest.flush()
            all_records.extend(records)
    status = 0 if all(r["status"] == "ok" for r in all_records) else 1
    return status, all_records


# exact

def _solve_volume(v: Volume3D, cfg: JobConfig):
    prob = build_problem(v, cfg.lam)
    step0 = cfg.step0 if cfg.step0 is not None else suggest_step0(prob)
    return solve(prob, cfg.iterations, step0)


def _cosine(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return None
    return float(a @ b) / (na * nb)


def exact_file(path: str, cfg: JobConfig) -> dict:
    """Solve the exact rank-pooling problem for one volume and emit its artefacts.

    Writes the weight plane image, ``<stem>_exact_trace.csv`` and
    ``<stem>_exact_report.json``; returns the report.
    """
    started = time.perf_counter()
    stem = output_stem(path)
    try:
        vol, _ = read_volume(path)
        prob = build_problem(vol, cfg.lam)
        step0 = cfg.step0 if cfg.step0 is not None else suggest_step0(prob)
        sol = solve(prob, cfg.iterations, step0)
        img = DynamicImage(Plane2D(sol.plane(vol.height, vol.width)), PoolMethod.EXACT_RANK_POOL, vol.depth)
        approx = approx_rank_pool(vol, Strategy(cfg.strategy))

        out_img = normalize_min_max(img) if cfg.normalize else img
        image_path = os.path.join(cfg.output_dir, f"{stem}_exact{EXTENSIONS[cfg.output_format]}")
        write_image(image_path, out_img, cfg.output_format)

        trace_path = os.path.join(cfg.output_dir, f"{stem}_exact_trace.csv")
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "best_so_far"])
            w.writerow([0, repr(sol.initial_objective), repr(sol.initial_objective)])
            best = math.inf
            for k, e in enumerate(sol.objective_trace, start=1):
                best = min(best, float(e))
                w.writerow([k, repr(float(e)), repr(best)])

        report = {
            "input": path,
            "status": "ok",
            "depth": vol.depth,
            "lambda": cfg.lam,
            "iterations": sol.iterations,
            "step0": step0,
            "step_schedule": sol.step_schedule,
            "initial_objective": sol.initial_objective,
            "final_objective": sol.objective,
            "best_iteration": sol.best_iteration,
            "cosine_to_approx": _cosine(sol.d, approx.values),
            "output": image_path,
            "trace": trace_path,
            "wall_time_s": time.perf_counter() - started,
        }
    except Exception as exc:
        return _error_record({"input": path}, exc, wall_time_s=time.perf_counter() - started)
    with open(os.path.join(cfg.output_dir, f"{stem}_exact_report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def run_exact(cfg: JobConfig) -> Tuple[int, List[dict]]:
    cfg = cfg.validated()
    paths = expand_inputs(cfg.inputs)
    if not paths:
        raise ConfigError("no inputs given")
    _check_unique_stems(paths)
    os.makedirs(cfg.output_dir, exist_ok=True)
    reports = list(_map_ordered(lambda p: exact_file(p, cfg), paths, cfg.workers))
    return (0 if all(r["status"] == "ok" for r in reports) else 1), reports


# stats

def stats_file(path: str) -> StatsReport:
    try:
        arr = read_image_array(path)
        axes = (1, 2) if arr.ndim == 3 and arr.shape[0] == 3 and not path.endswith((".nii", ".nii.gz")) else None
        return image_stats(arr, path, axes)
    except Exception as exc:
        nan = float("nan")
        return StatsReport(path, nan, nan, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")


def run_stats(paths: Sequence[str], workers: int = 1) -> Tuple[int, List[StatsReport]]:
    paths = expand_inputs(paths)
    rows = list(_map_ordered(stats_file, paths, max(1, workers)))
    return (0 if all(not r.error for r in rows) else 1), rows
