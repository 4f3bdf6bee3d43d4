"""Command-line interface.

Subcommands:

* ``copsym test``        run one symmetry test on a two-column CSV
* ``copsym simulate``    run a level/power study from a config file
* ``copsym order-scan``  power against the Bernstein order
* ``copsym fetch-ndbc``  download (or copy) a yearly buoy archive

Exit codes: 0 ok, 2 data error, 3 network error, 64 usage/config error.
Every command that produces output writes a manifest next to it with the
resolved configuration, seed, version and output checksums; re-running the
same command reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import run_test, run_test_empirical
from .errors import ConfigError, DataError, NetworkError
from .estimators import Sample, default_order
from .ndbc import archive_name, fetch_stdmet
from .study import StudyConfig, order_scan, run_level_study, run_power_study

_EXIT_OK = 0
_EXIT_DATA = 2
_EXIT_NETWORK = 3
_EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(path: Path, command: str, config: dict, seed, outputs: list[Path], t0: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.monotonic() - t0, 3),
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_sample_csv(path) -> Sample:
    """Two numeric columns; a non-numeric first row is taken as a header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = []
    first = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2:
            raise DataError(f"{path}:{lineno}: expected two comma-separated columns")
        try:
            pair = (float(parts[0]), float(parts[1]))
        except ValueError:
            if first:
                first = False
                continue  # non-numeric first row is a header
            raise DataError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
        first = False
        rows.append(pair)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows)
    return Sample(arr[:, 0], arr[:, 1])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_test(args) -> int:
    t0 = time.monotonic()
    sample = read_sample_csv(args.input)
    m = args.m if args.m is not None else default_order(sample.n)
    wanted = [s.strip().lower() for s in args.stats.split(",") if s.strip()]
    if not wanted or any(s not in ("r", "s", "t") for s in wanted):
        raise ConfigError(f"--stats must name statistics from r,s,t; got {args.stats!r}")
    if args.empirical:
        result = run_test_empirical(
            sample, grid=args.grid, H=args.H, seed=args.seed, pvalue_rule=args.pvalue_rule
        )
    else:
        result = run_test(
            sample, m=m, grid=args.grid, H=args.H, seed=args.seed, pvalue_rule=args.pvalue_rule
        )

    payload = result.to_dict()
    payload["stats"] = {k: v for k, v in payload["stats"].items() if k in wanted}
    out_path = Path(args.out) if args.out else Path(args.input).with_suffix(".symtest.json")
    out_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")

    print(f"n = {result.n}, method = {result.method}"
          + (f" (m = {result.m})" if result.m is not None else "")
          + f", grid = {result.grid_resolution}, H = {result.H}, seed = {result.seed}")
    for note in result.warnings:
        print(f"warning: {note}")
    print(f"{'stat':>4}  {'value':>14}  {'scaled':>14}  {'p-value':>8}")
    stats = payload["stats"]
    for name in ("r", "s", "t"):
        if name in stats:
            entry = stats[name]
            print(f"{name:>4}  {entry['value']:14.8g}  {entry['scaled']:14.8g}  {entry['p']:8.4f}")
    print(f"report: {out_path}")
    _write_manifest(
        out_path.with_suffix(out_path.suffix + ".manifest.json"),
        "test",
        {
            "input": str(args.input),
            "m": result.m,
            "grid": args.grid,
            "H": args.H,
            "empirical": bool(args.empirical),
            "stats": wanted,
            "pvalue_rule": args.pvalue_rule,
        },
        args.seed,
        [out_path],
        t0,
    )
    return _EXIT_OK


def _cmd_simulate(args) -> int:
    t0 = time.monotonic()
    config = StudyConfig.from_file(args.config)
    out_dir = Path(args.out)
    kind = args.kind
    if kind == "auto":
        kind = "level" if all(d is None for d in config.deltas) else "power"
    runner = run_level_study if kind == "level" else run_power_study
    report = runner(config, out_dir=out_dir, workers=args.workers, progress=args.progress)
    outputs = [out_dir / "report.csv", out_dir / "report.txt"]
    print(report.to_table_text())
    print(f"study finished in {report.wall_seconds:.1f}s; wrote {outputs[0]} and {outputs[1]}")
    _write_manifest(
        out_dir / "manifest.json",
        f"simulate:{kind}",
        {"config_file": str(args.config), "config_digest": config.digest(), "workers": args.workers},
        config.seed,
        outputs,
        t0,
    )
    return _EXIT_OK


def _cmd_order_scan(args) -> int:
    t0 = time.monotonic()
    config = StudyConfig.from_file(args.config)
    if args.m_min > args.m_max:
        raise ConfigError(f"--m-min {args.m_min} exceeds --m-max {args.m_max}")
    m_values = range(args.m_min, args.m_max + 1)
    out_dir = Path(args.out)
    report = order_scan(config, m_values, out_dir=out_dir, workers=args.workers, progress=args.progress)
    out_path = out_dir / "order_scan.csv"
    print(f"order scan finished in {report.wall_seconds:.1f}s; wrote {out_path}")
    _write_manifest(
        out_dir / "manifest.json",
        "order-scan",
        {
            "config_file": str(args.config),
            "config_digest": config.digest(),
            "m_min": args.m_min,
            "m_max": args.m_max,
            "workers": args.workers,
        },
        config.seed,
        [out_path],
        t0,
    )
    return _EXIT_OK


def _cmd_fetch_ndbc(args) -> int:
    t0 = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.from_file:
        src = Path(args.from_file)
        if not src.exists():
            raise DataError(f"local archive {src} does not exist")
        name = archive_name(args.station, args.year)
        if src.suffix != ".gz":
            name = name.removesuffix(".gz")
        dest = out_dir / name
        shutil.copyfile(src, dest)
        digest = hashlib.sha256(dest.read_bytes()).hexdigest()
        dest.with_suffix(dest.suffix + ".sha256").write_text(f"{digest}  {dest.name}\n")
        path = dest
    else:
        path = fetch_stdmet(args.station, args.year, out_dir)
    print(f"archive: {path}")
    _write_manifest(
        out_dir / "manifest.json",
        "fetch-ndbc",
        {"station": args.station, "year": args.year, "from_file": args.from_file},
        None,
        [path],
        t0,
    )
    return _EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="copsym", description="Exchange-symmetry tests for bivariate copulas")
    parser.add_argument("--version", action="version", version=f"copsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test one CSV sample for copula symmetry")
    p_test.add_argument("--input", required=True, help="two-column CSV (optional header)")
    p_test.add_argument("--m", type=int, default=None, help="Bernstein order (default: ceil(sqrt(n)))")
    p_test.add_argument("--grid", type=int, default=20, help="integration grid resolution")
    p_test.add_argument("--H", type=int, default=200, help="multiplier bootstrap replicates")
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--empirical", action="store_true", help="use the unsmoothed empirical-copula test")
    p_test.add_argument("--stats", default="r,s,t", help="subset of statistics to report")
    p_test.add_argument("--pvalue-rule", choices=("raw", "plus-one"), default="raw")
    p_test.add_argument("--out", default=None, help="JSON report path")
    p_test.set_defaults(func=_cmd_test)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo level/power study")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--kind", choices=("auto", "level", "power"), default="auto")
    p_sim.add_argument("--progress", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_scan = sub.add_parser("order-scan", help="power against the Bernstein order")
    p_scan.add_argument("--config", required=True)
    p_scan.add_argument("--m-min", type=int, required=True)
    p_scan.add_argument("--m-max", type=int, required=True)
    p_scan.add_argument("--out", required=True)
    p_scan.add_argument("--workers", type=int, default=1)
    p_scan.add_argument("--progress", action="store_true")
    p_scan.set_defaults(func=_cmd_order_scan)

    p_fetch = sub.add_parser("fetch-ndbc", help="download a yearly stdmet archive")
    p_fetch.add_argument("--station", required=True)
    p_fetch.add_argument("--year", type=int, required=True)
    p_fetch.add_argument("--out", required=True)
    p_fetch.add_argument("--from-file", default=None, help="copy a local archive instead of fetching")
    p_fetch.set_defaults(func=_cmd_fetch_ndbc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except NetworkError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return _EXIT_NETWORK
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
