"""Command-line entry point: ``quadric-dioph <experiment> --config FILE``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from filelock import FileLock, Timeout

from .experiments import EXPERIMENTS, ConfigError, ExperimentResult, load_config, manifest, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SAFE_INT = 2**53


def jsonable(obj):
    """Integers beyond 2^53 become decimal strings; non-finite floats become strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return str(obj) if abs(obj) > SAFE_INT else obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return jsonable(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_results(out_dir: Path, result: ExperimentResult, man: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "data.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.header)
        w.writerows(result.rows)
    _dump({**result.summary, "passed": result.passed}, out_dir / "summary.json")
    _dump(man, out_dir / "manifest.json")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadric-dioph", description="Experiments on rational points of quadrics.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, type=Path, help="JSON configuration file")
    p.add_argument("--h-max", type=int, default=None, help="override h_max")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--out", type=Path, default=Path("results"), help="results root (default: results)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        raw = json.loads(text)
        cfg = load_config(args.experiment, raw, text, args.config.parent,
                          overrides={"h_max": args.h_max, "seed": args.seed})
    except json.JSONDecodeError as err:
        print(f"error: {args.config}: line {err.lineno} column {err.colno}: {err.msg}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"error: {args.config}: {err}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out / args.experiment / cfg.digest()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        with FileLock(str(out_dir / ".lock"), timeout=0):
            try:
                result = run(cfg)
            except ConfigError as err:
                print(f"error: {args.config}: {err}", file=sys.stderr)
                return EXIT_USAGE
            write_results(out_dir, result, manifest(cfg))
    except Timeout:
        print(f"error: {out_dir} is locked by another run", file=sys.stderr)
        return EXIT_USAGE
    status = "PASS" if result.passed else "FAIL"
    print(f"{args.experiment}: {status} -> {out_dir}")
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
