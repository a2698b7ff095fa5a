"""Command line entry point: ``dynimage {convert,info,exact,stats,bench}``.

Job settings come from, in increasing precedence: built-in defaults, the
``DYNIMAGE_WORKERS`` environment variable (worker count only), a TOML config
file given with ``--config``, and explicit flags.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from . import bench as bench_mod
from . import stats as stats_mod
from .errors import ConfigError, DynImageError
from .imageio import FORMATS
from .nifti import read_header
from .pipeline import CHANNEL_MODES, METHODS, WORKERS_ENV, JobConfig, run_convert, run_exact, run_stats

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

# config-file key -> JobConfig field
_CONFIG_KEYS = {
    "inputs": "inputs",
    "method": "method",
    "strategy": "strategy",
    "channel_mode": "channel_modes",
    "channel_modes": "channel_modes",
    "normalize": "normalize",
    "output_dir": "output_dir",
    "format": "output_format",
    "output_format": "output_format",
    "lambda": "lam",
    "lam": "lam",
    "iterations": "iterations",
    "step0": "step0",
    "workers": "workers",
}


def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    out = {}
    for key, value in raw.items():
        name = _CONFIG_KEYS.get(key.replace("-", "_"))
        if name is None:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        if name in ("inputs", "channel_modes") and isinstance(value, str):
            value = [value]
        out[name] = value
    return out


def build_config(args: argparse.Namespace) -> JobConfig:
    values: Dict[str, Any] = load_config(args.config) if args.config else {}
    flags = {
        "inputs": args.inputs or None,
        "method": getattr(args, "method", None),
        "strategy": getattr(args, "strategy", None),
        "channel_modes": getattr(args, "channel_mode", None),
        "normalize": args.normalize,
        "output_dir": args.output_dir,
        "output_format": args.format,
        "lam": getattr(args, "lam", None),
        "iterations": getattr(args, "iterations", None),
        "step0": getattr(args, "step0", None),
        "workers": args.workers,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.command == "exact":
        values["method"] = "exact"
    return JobConfig(**values).validated()


def _add_job_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="*", help="NIfTI volumes (.nii / .nii.gz) or glob patterns")
    p.add_argument("-o", "--output-dir", help="directory for outputs (default: current)")
    p.add_argument("-f", "--format", choices=FORMATS, help="output image format (default png8)")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                   help="min-max normalise to [0, 1] (required for PNG; default off for raw-f32)")
    p.add_argument("-j", "--workers", type=int, help=f"parallel files (default ${WORKERS_ENV} or 1)")
    p.add_argument("-c", "--config", help="TOML file with job settings; flags override it")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynimage", description="Collapse 3D volumes into 2D dynamic images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="pool volumes into images")
    _add_job_options(p)
    p.add_argument("-m", "--method", choices=METHODS, help="pooling method (default dynamic)")
    p.add_argument("-s", "--strategy", choices=("single-pass", "two-pass"),
                   help="approximate rank pooling route (default single-pass)")
    p.add_argument("--channel-mode", action="append", choices=sorted(CHANNEL_MODES),
                   help="repeatable; one output per mode (default replicate3)")
    _add_exact_options(p)

    p = sub.add_parser("exact", help="solve the exact rank-pooling problem")
    _add_job_options(p)
    _add_exact_options(p)

    p = sub.add_parser("info", help="print a NIfTI-1 header")
    p.add_argument("path")

    p = sub.add_parser("stats", help="image statistics as CSV")
    p.add_argument("paths", nargs="+", help="PNG, raw .f32 (with sidecar) or NIfTI files")
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.add_argument("-j", "--workers", type=int, default=1)

    p = sub.add_parser("bench", help="time the pooling methods on synthetic volumes")
    p.add_argument("--size", action="append", help="N or WxHxD; repeatable (default 110)")
    p.add_argument("--repeats", type=int, default=5, help="timed runs per method; median is reported")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV destination (default stdout)")
    return parser


def _add_exact_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, help="regulariser weight (default 1e-3)")
    p.add_argument("--iterations", type=int, help="subgradient steps (default 500)")
    p.add_argument("--step0", type=float, help="initial step size (default: 1 / curvature estimate)")


def format_header(hdr) -> str:
    lines = [
        f"sizeof_hdr   {hdr.sizeof_hdr}",
        f"byteorder    {'little' if hdr.byteorder == '<' else 'big'}",
        f"magic        {hdr.magic!r}",
        f"dim          {list(hdr.dim)}",
        f"extents      {'x'.join(str(n) for n in hdr.shape)}",
        f"datatype     {hdr.datatype}",
        f"bitpix       {hdr.bitpix}",
        f"pixdim       {[float(x) for x in hdr.pixdim]}",
        f"vox_offset   {hdr.vox_offset}",
        f"scl_slope    {hdr.scl_slope}",
        f"scl_inter    {hdr.scl_inter}",
        f"qform_code   {hdr.qform_code}",
        f"sform_code   {hdr.sform_code}",
        f"descrip      {hdr.descrip!r}",
    ]
    return "\n".join(lines)


def _emit_csv(writer, rows, output: Optional[str]) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            writer(rows, fh)
    else:
        writer(rows, sys.stdout)


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "info":
            print(format_header(read_header(args.path)))
            return 0
        if args.command == "stats":
            status, rows = run_stats(args.paths, args.workers)
            _emit_csv(stats_mod.write_csv, rows, args.output)
            for r in rows:
                if r.error:
                    print(f"error: {r.path}: {r.error}", file=sys.stderr)
            return status
        if args.command == "bench":
            rows = bench_mod.run_bench(args.size or ["110"], args.repeats, args.seed)
            _emit_csv(bench_mod.write_csv, rows, args.output)
            return 0
        cfg = build_config(args)
        if args.command == "convert":
            status, records = run_convert(cfg)
        else:
            status, records = run_exact(cfg)
            for r in records:
                print(json.dumps(r, sort_keys=True))
        for r in records:
            if r["status"] != "ok":
                print(f"error: {r['input']}: {r['error']}", file=sys.stderr)
        return status
    except DynImageError as exc:
        print(f"dynimage {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
