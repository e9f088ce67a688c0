"""Batch command-line front end.

Usage:
    tsqc quantize-a series.csv -o out.tsqc (--n N | --max-cr-delta D | --min-loss-cr R)
    tsqc banded-b series.csv -o out.tsqc (--low L --high H | --rolling W,LQ,UQ) [--slices N]
    tsqc coverage-c cloud.csv -o out.tsqc --delta D [--outlier-fraction F] [--normalcy-factor G [--normalcy-stat S]]
    tsqc reconstruct out.tsqc -o series.csv [--grid grid.csv] [--full]

Exit codes: 0 ok, 2 usage error, 3 data or format error, 4 infeasible constraint.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import pipeline
from .banded import DEFAULT_SLICES, MAX_SLICES, STATISTICS
from .compressor import InconsistentGridError, change_points, decompress
from .coverage import RADIUS_STATISTICS
from .core import TimeSeries
from .formats import (
    BandedArtifact,
    CoverageArtifact,
    FormatError,
    decode,
    encode_binary,
    encode_text,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4

logger = logging.getLogger("tsqc")


class DataError(Exception):
    """Input file could not be parsed into a valid series or cloud."""


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- io helpers


def read_table(path) -> Tuple[List[int], List[List[float]]]:
    """Read ``timestamp,value[,value...]`` rows; a non-numeric first row is a header."""
    try:
        with open(path, newline="") as f:
            rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    if rows:
        try:
            int(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need a timestamp column and at least one value column")
    timestamps, values = [], []
    for lineno, row in enumerate(rows, 1):
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        try:
            timestamps.append(int(row[0]))
            vals = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{path}: row {lineno}: non-finite value")
        values.append(vals)
    if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise DataError(f"{path}: timestamps must be strictly increasing")
    return timestamps, values


def read_series(path) -> TimeSeries:
    ts, vals = read_table(path)
    if len(vals[0]) != 1:
        raise DataError(f"{path}: expected one value column, found {len(vals[0])}")
    return TimeSeries(tuple(ts), tuple(v[0] for v in vals))


def read_grid(path) -> List[int]:
    try:
        with open(path, newline="") as f:
            rows = [r for r in csv.reader(f) if r and r[0].strip()]
    except OSError as exc:
        raise UsageError(f"grid {path}: {exc.strerror}") from exc
    if rows:
        try:
            int(rows[0][0])
        except ValueError:
            rows = rows[1:]
    try:
        return [int(r[0]) for r in rows]
    except ValueError as exc:
        raise DataError(f"grid {path}: {exc}") from exc


def atomic_write(path, data) -> None:
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def _write_artifact(path, artifact, fmt: Optional[str]) -> None:
    if fmt is None:
        fmt = "text" if str(path).endswith(".json") else "binary"
    atomic_write(path, encode_text(artifact) if fmt == "text" else encode_binary(artifact))


# ---------------------------------------------------------------- argument types


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _finite_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {s}")
    return v


def _nonneg_float(s: str) -> float:
    v = _finite_float(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _percent(s: str) -> float:
    v = _finite_float(s)
    if not 0 <= v <= 100:
        raise argparse.ArgumentTypeError(f"must be in [0, 100], got {v}")
    return v


def _fraction(s: str) -> float:
    v = _finite_float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {v}")
    return v


def _rolling(s: str) -> Tuple[int, float, float]:
    parts = s.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected WINDOW,LOWER_Q,UPPER_Q")
    try:
        window, lq, uq = int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rolling spec {s!r}")
    if window < 2 or not 0 <= lq < uq <= 1:
        raise argparse.ArgumentTypeError("need window >= 2 and 0 <= LOWER_Q < UPPER_Q <= 1")
    return window, lq, uq


def _default_seed() -> int:
    env = os.environ.get("TSQ_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"TSQ_SEED must be an integer, got {env!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsqc", description="Lossy time-series quantization and compression")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("inputs", nargs="+", help="input CSV file(s)")
        p.add_argument("-o", "--output", required=True, help="artifact path, or a directory for several inputs")
        p.add_argument("--format", choices=("binary", "text"), help="artifact encoding (default: by suffix)")
        p.add_argument("--stats", help="write the stats JSON here instead of stdout")
        p.add_argument("--jobs", type=_positive_int, default=1, help="files processed in parallel")

    a = sub.add_parser("quantize-a", help="quantile quantization with an optional constraint")
    common(a)
    mode = a.add_mutually_exclusive_group(required=True)
    mode.add_argument("--n", type=_positive_int, help="fixed number of levels")
    mode.add_argument("--max-cr-delta", type=_nonneg_float, metavar="DELTA", help="maximize CR with l1 <= DELTA")
    mode.add_argument("--min-loss-cr", type=_percent, metavar="R", help="minimize l1 with CR >= R percent")
    a.add_argument("--max-levels", type=_positive_int, help="cap on the level counts scanned")

    b = sub.add_parser("banded-b", help="threshold-banded quantization")
    common(b)
    b.add_argument("--low", type=_finite_float)
    b.add_argument("--high", type=_finite_float)
    b.add_argument("--rolling", type=_rolling, metavar="W,LQ,UQ")
    b.add_argument("--slices", type=_positive_int, default=DEFAULT_SLICES)
    b.add_argument("--stat", choices=STATISTICS, default="median")

    c = sub.add_parser("coverage-c", help="delta-coverage of a multi-column cloud")
    common(c)
    c.add_argument("--delta", type=_nonneg_float, required=True)
    c.add_argument("--outlier-fraction", type=_fraction)
    c.add_argument("--normalcy-factor", type=_nonneg_float)
    c.add_argument("--normalcy-stat", choices=RADIUS_STATISTICS, default="max")
    c.add_argument("--seed", type=int, default=None, help="default: $TSQ_SEED or 0")
    c.add_argument("--sweep", help="write a K vs error table (CSV) here")
    c.add_argument("--sweep-max-k", type=_positive_int)

    r = sub.add_parser("reconstruct", help="decode an artifact back to CSV")
    r.add_argument("artifact")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--grid", help="CSV whose first column is the original timestamp grid")
    r.add_argument("--full", action="store_true", help="require a full LOCF reconstruction (needs --grid)")
    return parser


# ---------------------------------------------------------------- commands


def _run_one(command: str, in_path: str, out_path: str, opts: dict) -> Tuple[int, dict]:
    """Process one input file; returns (exit code, stats or error record)."""
    try:
        if command == "quantize-a":
            run = pipeline.run_quantile(
                read_series(in_path),
                n=opts["n"],
                max_cr_delta=opts["max_cr_delta"],
                min_loss_cr=opts["min_loss_cr"],
                max_levels=opts["max_levels"],
            )
        elif command == "banded-b":
            run = pipeline.run_banded(
                read_series(in_path),
                opts["slices"],
                opts["stat"],
                low=opts["low"],
                high=opts["high"],
                rolling=opts["rolling"],
            )
        else:
            ts, values = read_table(in_path)
            run = pipeline.run_coverage(
                ts,
                values,
                opts["delta"],
                seed=opts["seed"],
                outlier_fraction=opts["outlier_fraction"],
                normalcy_factor=opts["normalcy_factor"],
                normalcy_statistic=opts["normalcy_stat"],
            )
            if opts.get("sweep"):
                k_max = opts.get("sweep_max_k") or run.stats["k"]
                rows = pipeline.kmeans_sweep(
                    values, k_max, opts["seed"], opts["normalcy_factor"], opts["normalcy_stat"]
                )
                header = list(rows[0])
                atomic_write(opts["sweep"], _csv_text(header, ([r[h] for h in header] for r in rows)))
    except DataError as exc:
        return EXIT_DATA, {"input": in_path, "error": str(exc)}
    except ValueError as exc:
        # validation failures inside the algorithms on otherwise parseable input
        return EXIT_DATA, {"input": in_path, "error": str(exc)}
    _write_artifact(out_path, run.artifact, opts["format"])
    stats = {"input": in_path, "output": out_path, **run.stats}
    return (EXIT_OK if run.feasible else EXIT_INFEASIBLE), stats


def _output_paths(inputs: Sequence[str], output: str, fmt: Optional[str]) -> List[str]:
    if len(inputs) == 1:
        return [output]
    out_dir = Path(output)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = ".json" if fmt == "text" else ".tsqc"
    return [str(out_dir / (Path(p).stem + suffix)) for p in inputs]


def cmd_batch(args) -> int:
    if args.command == "banded-b":
        if args.rolling is not None and (args.low is not None or args.high is not None):
            raise UsageError("--rolling excludes --low/--high")
        if args.rolling is None:
            if args.low is None or args.high is None:
                raise UsageError("need --low and --high, or --rolling")
            if not args.low < args.high:
                raise UsageError(f"--low ({args.low}) must be below --high ({args.high})")
        if args.slices > MAX_SLICES:
            logger.warning("%d slices is outside the recommended range 1-%d", args.slices, MAX_SLICES)
    if args.command == "coverage-c":
        if args.seed is None:
            args.seed = _default_seed()
        if args.sweep and len(args.inputs) > 1:
            raise UsageError("--sweep takes a single input")
    opts = vars(args).copy()
    outputs = _output_paths(args.inputs, args.output, args.format)
    jobs = list(zip(args.inputs, outputs))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_run_one, *zip(*[(args.command, i, o, opts) for i, o in jobs])))
    else:
        results = [_run_one(args.command, i, o, opts) for i, o in jobs]
    for _, rec in results:
        if "error" in rec:
            print(f"tsqc: {rec['input']}: {rec['error']}", file=sys.stderr)
    stats = [rec for _, rec in results]
    doc = json.dumps(stats[0] if len(stats) == 1 else stats, indent=2, sort_keys=True) + "\n"
    if args.stats:
        atomic_write(args.stats, doc)
    else:
        sys.stdout.write(doc)
    return max(code for code, _ in results)


def cmd_reconstruct(args) -> int:
    if args.full and not args.grid:
        raise UsageError("--full needs --grid")
    try:
        with open(args.artifact, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise DataError(f"{args.artifact}: {exc.strerror}") from exc
    art = decode(data)
    p = art.payload
    grid = read_grid(args.grid) if args.grid else None
    if isinstance(p, CoverageArtifact):
        pts = p.decoded_points().tolist()
        header = ["timestamp"] + [f"value_{i + 1}" for i in range(p.dim)]
        atomic_write(args.output, _csv_text(header, ([t, *row] for t, row in zip(p.timestamps, pts))))
        return EXIT_OK
    comp = p.compressed
    if grid is None:
        series = change_points(comp)
    else:
        if len(grid) != comp.original_length or grid[-1] != comp.original_last_timestamp:
            raise DataError(
                f"grid has {len(grid)} points ending at {grid[-1] if grid else None}; artifact expects "
                f"{comp.original_length} ending at {comp.original_last_timestamp}"
            )
        series = decompress(comp, grid)
    rows = zip(series.timestamps, series.values)
    if isinstance(p, BandedArtifact) and grid is None:
        rows = ((t, v, int(e)) for (t, v), e in zip(rows, p.exact))
        header = ["timestamp", "value", "exact"]
    else:
        header = ["timestamp", "value"]
    atomic_write(args.output, _csv_text(header, rows))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "reconstruct":
            return cmd_reconstruct(args)
        return cmd_batch(args)
    except UsageError as exc:
        print(f"tsqc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, InconsistentGridError) as exc:
        print(f"tsqc: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FormatError as exc:
        print(f"tsqc: {args.artifact if args.command == 'reconstruct' else ''}: {exc} [{exc.code}]", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
