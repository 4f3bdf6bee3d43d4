"""Monte Carlo harness: level and power studies and the order scan.

A study is a declarative grid (families x taus x deltas x (n, m) pairs); each
cell draws ``repetitions`` samples, runs the Bernstein and/or empirical test
on every sample, and reports rejection percentages at the nominal level with
their binomial standard errors.

Repetitions parallelize over a spawned worker pool.  Every repetition derives
its seeds from (master seed, cell index, repetition index) through
counter-based streams and the aggregation is a commutative count, so reports
are identical for any worker count.  Finished cells stream to disk and an
interrupted study resumes from them.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from dataclasses import dataclass
from hashlib import sha256
from multiprocessing import get_context
from pathlib import Path

from . import streams
from .bootstrap import run_test, run_test_empirical
from .errors import ConfigError
from .models import CopulaSpec, Family, tau_to_param

__all__ = [
    "StudyCell",
    "StudyConfig",
    "ReportRow",
    "StudyReport",
    "OrderScanReport",
    "run_level_study",
    "run_power_study",
    "order_scan",
]

_BERNSTEIN_LABELS = ("R_nm", "S_nm", "T_nm")
_EMPIRICAL_LABELS = ("R_n", "S_n", "T_n")
_LABEL_ORDER = ("R_n", "R_nm", "S_n", "S_nm", "T_n", "T_nm")
_STAT_MODES = ("bernstein", "empirical", "both")


@dataclass(frozen=True)
class StudyCell:
    """One grid point of a study, with the copula parameter resolved."""

    index: int
    family: str
    theta: float
    nu: float
    tau: float
    delta: float | None
    n: int
    m: int

    def spec(self) -> CopulaSpec:
        return CopulaSpec(self.family, self.theta, self.delta, self.nu)

    def key(self) -> dict:
        return {
            "family": self.family,
            "tau": self.tau,
            "delta": self.delta,
            "n": self.n,
            "m": self.m,
        }


def _family_base(token: str) -> tuple[Family, float]:
    """Validate a study family token: a family name plus optionally nu=.

    The tau and delta grids come from the study config, so fixing them in the
    token is rejected.
    """
    parts = [p.strip() for p in str(token).lower().split(":") if p.strip()]
    if not parts:
        raise ConfigError("empty family token")
    try:
        family = Family(parts[0])
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown copula family {parts[0]!r} (known: {known})") from None
    nu = 4.0
    for part in parts[1:]:
        key, _, value = part.partition("=")
        if key.strip() != "nu":
            raise ConfigError(
                f"family token {token!r} may only carry nu=; tau and delta come "
                "from the study grids"
            )
        try:
            nu = float(value)
        except ValueError:
            raise ConfigError(f"non-numeric nu in family token {token!r}") from None
    return family, nu


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


@dataclass(frozen=True)
class StudyConfig:
    """Declarative Monte Carlo experiment.

    ``families`` are copula tokens without tau or delta (``clayton``,
    ``student:nu=4``); ``sizes`` pairs each sample size with its Bernstein
    order.  ``statistics`` selects which test suites run.
    """

    families: tuple[str, ...]
    taus: tuple[float, ...]
    sizes: tuple[tuple[int, int], ...]
    deltas: tuple[float | None, ...] = (None,)
    repetitions: int = 500
    H: int = 200
    grid_resolution: int = 20
    alpha: float = 0.05
    seed: int = 0
    statistics: str = "both"

    def __post_init__(self):
        if not self.families:
            raise ConfigError("study needs at least one copula family")
        if not self.taus:
            raise ConfigError("study needs at least one Kendall tau")
        if not self.sizes:
            raise ConfigError("study needs at least one (n, m) pair")
        if not self.deltas:
            raise ConfigError("deltas may not be an empty list")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.H < 1:
            raise ConfigError("H must be >= 1")
        if self.statistics not in _STAT_MODES:
            raise ConfigError(f"statistics must be one of {_STAT_MODES}")
        for token in self.families:
            _family_base(token)

    @classmethod
    def from_text(cls, text: str) -> "StudyConfig":
        """Parse the plain key = value study file format."""
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            values[key.strip().lower()] = value.strip()

        def pop(key, *aliases, default=None):
            for k in (key, *aliases):
                if k in values:
                    return values.pop(k)
            return default

        families = tuple(tok.strip().lower() for tok in (pop("families", "family") or "").split(",") if tok.strip())
        taus = _parse_float_list(pop("tau", "taus", default=""))
        delta_text = pop("delta", "deltas")
        deltas = _parse_float_list(delta_text) if delta_text else (None,)
        n_list = _parse_int_list(pop("n", default=""))
        m_list = _parse_int_list(pop("m", default=""))
        if len(n_list) != len(m_list):
            raise ConfigError(
                f"n and m lists must pair up one-to-one, got {len(n_list)} vs {len(m_list)}"
            )
        cfg = cls(
            families=families,
            taus=taus,
            sizes=tuple(zip(n_list, m_list)),
            deltas=deltas,
            repetitions=int(pop("repetitions", "reps", default="500")),
            H=int(pop("h", default="200")),
            grid_resolution=int(pop("grid", "n_grid", default="20")),
            alpha=float(pop("alpha", default="0.05")),
            seed=int(pop("seed", default="0")),
            statistics=(pop("stats", "statistics", default="both") or "both").lower(),
        )
        if values:
            raise ConfigError(f"unknown config keys: {sorted(values)}")
        return cfg

    @classmethod
    def from_file(cls, path) -> "StudyConfig":
        return cls.from_text(Path(path).read_text())

    def labels(self) -> tuple[str, ...]:
        if self.statistics == "bernstein":
            return _BERNSTEIN_LABELS
        if self.statistics == "empirical":
            return _EMPIRICAL_LABELS
        return _LABEL_ORDER

    def cells(self) -> list[StudyCell]:
        out = []
        index = 0
        for token in self.families:
            family, nu = _family_base(token)
            for tau in self.taus:
                theta = tau_to_param(family, tau)
                for delta in self.deltas:
                    for n, m in self.sizes:
                        out.append(
                            StudyCell(
                                index=index,
                                family=family.value,
                                theta=theta,
                                nu=nu,
                                tau=tau,
                                delta=delta,
                                n=n,
                                m=m,
                            )
                        )
                        index += 1
        return out

    def digest(self) -> str:
        payload = repr(
            (
                self.families,
                self.taus,
                self.deltas,
                self.sizes,
                self.repetitions,
                self.H,
                self.grid_resolution,
                self.alpha,
                self.seed,
                self.statistics,
            )
        )
        return sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ReportRow:
    family: str
    delta: float | None
    tau: float
    n: int
    m: int | None
    stat: str
    estimate_pct: float
    se_pct: float
    reps: int
    H: int
    seed: int


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


@dataclass
class StudyReport:
    """Per-cell rejection percentages with Monte Carlo standard errors."""

    rows: list[ReportRow]
    config: StudyConfig
    wall_seconds: float = 0.0

    def to_csv_text(self) -> str:
        lines = ["family,delta,tau,n,m,stat,estimate_pct,se_pct,reps,H,seed"]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        r.family,
                        _fmt(r.delta),
                        _fmt(r.tau),
                        str(r.n),
                        "NA" if r.m is None else str(r.m),
                        r.stat,
                        _fmt(r.estimate_pct),
                        _fmt(r.se_pct),
                        str(r.reps),
                        str(r.H),
                        str(r.seed),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_table_text(self) -> str:
        """Aligned table, one block per (n, m), statistics as columns."""
        labels = self.config.labels()
        blocks = []
        by_size: dict[tuple[int, int | None], dict] = {}
        for r in self.rows:
            by_size.setdefault((r.n, r.m), {}).setdefault(
                (r.family, r.delta, r.tau), {}
            )[r.stat] = r.estimate_pct
        for (n, m), table in sorted(by_size.items()):
            head = f"(n, m) = ({n}, {m})"
            col_names = ["model", "delta", "tau"] + list(labels)
            widths = [14, 7, 6] + [8] * len(labels)
            lines = [head, "  ".join(name.rjust(w) for name, w in zip(col_names, widths))]
            for (family, delta, tau), stats in sorted(table.items()):
                cells = [
                    family.rjust(widths[0]),
                    ("" if delta is None else f"{delta:g}").rjust(widths[1]),
                    f"{tau:g}".rjust(widths[2]),
                ]
                cells += [
                    (f"{stats[label]:.1f}" if label in stats else "").rjust(w)
                    for label, w in zip(labels, widths[3:])
                ]
                lines.append("  ".join(cells))
            blocks.append("\n".join(lines))
        return ("\n\n".join(blocks)) + "\n"

    def cell_value(self, family: str, tau: float, n: int, stat: str, delta=None) -> float:
        for r in self.rows:
            if (
                r.family == family
                and r.tau == tau
                and r.n == n
                and r.stat == stat
                and (r.delta is None if delta is None else r.delta == delta)
            ):
                return r.estimate_pct
        raise KeyError(f"no report row for {family} tau={tau} delta={delta} n={n} {stat}")

    def write(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "report.csv"
        txt_path = out_dir / "report.txt"
        csv_path.write_text(self.to_csv_text())
        txt_path.write_text(self.to_table_text())
        return [csv_path, txt_path]


# ---------------------------------------------------------------------------
# execution engine
# ---------------------------------------------------------------------------

def _pin_worker_threads() -> None:
    # worker math must not depend on BLAS thread count, or results would
    # change with machine load; children inherit this environment
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, "1")


def _repetition_pvalues(task) -> tuple[int, dict[str, float]]:
    """Worker body: one repetition of one cell; returns its p-values."""
    (cell_idx, rep, family, theta, nu, delta, n, m, H, grid_res, mode, master_seed) = task
    from .models import sample_copula  # local import keeps spawn costs visible

    spec = CopulaSpec(family, theta, delta, nu)
    pairs = sample_copula(spec, n, streams.derive_seed(master_seed, "sample", cell_idx, rep))
    test_seed = streams.derive_seed(master_seed, "test", cell_idx, rep)
    out: dict[str, float] = {}
    if mode in ("bernstein", "both"):
        res = run_test(pairs, m=m, grid=grid_res, H=H, seed=test_seed)
        out.update({"R_nm": res.p_r, "S_nm": res.p_s, "T_nm": res.p_t})
    if mode in ("empirical", "both"):
        res = run_test_empirical(pairs, grid=grid_res, H=H, seed=test_seed)
        out.update({"R_n": res.p_r, "S_n": res.p_s, "T_n": res.p_t})
    return cell_idx, out


def _map_tasks(tasks, worker, workers: int, progress: bool = False):
    """Run tasks on a spawned pool; yields results in completion order."""
    _pin_worker_threads()
    total = len(tasks)
    done = 0
    ctx = get_context("spawn")
    chunk = max(1, total // (max(1, workers) * 16))
    with ctx.Pool(processes=max(1, workers)) as pool:
        for result in pool.imap_unordered(worker, tasks, chunksize=chunk):
            done += 1
            if progress and (done % max(1, total // 100) == 0 or done == total):
                print(f"\r{done}/{total} repetitions", end="", file=sys.stderr, flush=True)
            yield result
    if progress and total:
        print(file=sys.stderr)


def _load_cell_file(path: Path, digest: str, reps: int) -> dict | None:
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if payload.get("digest") != digest or payload.get("reps") != reps:
        return None
    return payload["counts"]


def _run_study(config: StudyConfig, out_dir=None, workers: int = 1, progress: bool = False) -> StudyReport:
    t0 = time.monotonic()
    cells = config.cells()
    labels = config.labels()
    digest = config.digest()
    cell_dir = None
    if out_dir is not None:
        cell_dir = Path(out_dir) / "cells"
        cell_dir.mkdir(parents=True, exist_ok=True)

    counts: dict[int, dict[str, int]] = {}
    pending: list[StudyCell] = []
    for cell in cells:
        if cell_dir is not None:
            cached = _load_cell_file(cell_dir / f"cell{cell.index:04d}.json", digest, config.repetitions)
            if cached is not None:
                counts[cell.index] = {k: int(v) for k, v in cached.items()}
                continue
        counts[cell.index] = {label: 0 for label in labels}
        pending.append(cell)

    tasks = [
        (
            cell.index,
            rep,
            cell.family,
            cell.theta,
            cell.nu,
            cell.delta,
            cell.n,
            cell.m,
            config.H,
            config.grid_resolution,
            config.statistics,
            config.seed,
        )
        for cell in pending
        for rep in range(config.repetitions)
    ]
    finished: dict[int, int] = {cell.index: 0 for cell in pending}
    cell_by_index = {cell.index: cell for cell in cells}
    for cell_idx, pvals in _map_tasks(tasks, _repetition_pvalues, workers, progress):
        tally = counts[cell_idx]
        for label in labels:
            if pvals[label] <= config.alpha:
                tally[label] += 1
        finished[cell_idx] += 1
        if cell_dir is not None and finished[cell_idx] == config.repetitions:
            payload = {
                "digest": digest,
                "cell": cell_by_index[cell_idx].key(),
                "reps": config.repetitions,
                "counts": tally,
            }
            (cell_dir / f"cell{cell_idx:04d}.json").write_text(json.dumps(payload, sort_keys=True))

    rows = []
    reps = config.repetitions
    for cell in cells:
        for label in labels:
            frac = counts[cell.index][label] / reps
            rows.append(
                ReportRow(
                    family=cell.family,
                    delta=cell.delta,
                    tau=cell.tau,
                    n=cell.n,
                    m=cell.m,
                    stat=label,
                    estimate_pct=100.0 * frac,
                    se_pct=100.0 * math.sqrt(frac * (1.0 - frac) / reps),
                    reps=reps,
                    H=config.H,
                    seed=config.seed,
                )
            )
    report = StudyReport(rows=rows, config=config, wall_seconds=time.monotonic() - t0)
    if out_dir is not None:
        report.write(out_dir)
    return report


def run_level_study(config: StudyConfig, out_dir=None, workers: int = 1, progress: bool = False) -> StudyReport:
    """Rejection rates under symmetric copulas (the null hypothesis)."""
    if any(d not in (None, 0.0) for d in config.deltas):
        raise ConfigError("level studies must use symmetric copulas (no delta)")
    return _run_study(config, out_dir=out_dir, workers=workers, progress=progress)


def run_power_study(config: StudyConfig, out_dir=None, workers: int = 1, progress: bool = False) -> StudyReport:
    """Rejection rates under asymmetrized alternatives."""
    if all(d is None for d in config.deltas):
        raise ConfigError("power studies need delta values (use run_level_study otherwise)")
    return _run_study(config, out_dir=out_dir, workers=workers, progress=progress)


# ---------------------------------------------------------------------------
# order scan
# ---------------------------------------------------------------------------

def _scan_repetition(task) -> tuple[int, dict]:
    (rep, family, theta, nu, delta, n, m_values, H, grid_res, master_seed) = task
    from .models import sample_copula

    spec = CopulaSpec(family, theta, delta, nu)
    pairs = sample_copula(spec, n, streams.derive_seed(master_seed, "sample", 0, rep))
    test_seed = streams.derive_seed(master_seed, "test", 0, rep)
    out: dict = {}
    for m in m_values:
        res = run_test(pairs, m=m, grid=grid_res, H=H, seed=test_seed)
        out[("R_nm", m)] = res.p_r
        out[("S_nm", m)] = res.p_s
        out[("T_nm", m)] = res.p_t
    base = run_test_empirical(pairs, grid=grid_res, H=H, seed=test_seed)
    out[("R_n", None)] = base.p_r
    out[("S_n", None)] = base.p_s
    out[("T_n", None)] = base.p_t
    return 0, out


@dataclass
class OrderScanReport:
    """Power against the Bernstein order, with flat empirical baselines."""

    rows: list[tuple[int | None, str, float, float]]  # (m, stat, power_pct, se_pct)
    config: StudyConfig
    m_values: tuple[int, ...]
    wall_seconds: float = 0.0

    def to_csv_text(self) -> str:
        lines = ["m,stat,power_pct,se_pct"]
        for m, stat, power, se in self.rows:
            lines.append(f"{'NA' if m is None else m},{stat},{_fmt(power)},{_fmt(se)}")
        return "\n".join(lines) + "\n"

    def curve(self, stat: str) -> dict[int, float]:
        return {m: p for (m, s, p, _) in self.rows if s == stat and m is not None}

    def baseline(self, stat: str) -> float:
        for m, s, p, _ in self.rows:
            if s == stat and m is None:
                return p
        raise KeyError(stat)

    def write(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "order_scan.csv"
        path.write_text(self.to_csv_text())
        return [path]


def order_scan(
    config: StudyConfig,
    m_values,
    out_dir=None,
    workers: int = 1,
    progress: bool = False,
) -> OrderScanReport:
    """Power of each statistic for every order in ``m_values``.

    The study config must pin a single copula (one family, tau, delta) and a
    single sample size; the empirical baselines are reported once, with m=NA.
    """
    m_values = tuple(int(m) for m in m_values)
    if not m_values:
        raise ConfigError("order scan needs a non-empty m range")
    if len(config.families) != 1 or len(config.taus) != 1 or len(config.deltas) != 1 or len(config.sizes) != 1:
        raise ConfigError("order scan needs exactly one family, tau, delta and sample size")
    t0 = time.monotonic()
    cell = config.cells()[0]
    tasks = [
        (
            rep,
            cell.family,
            cell.theta,
            cell.nu,
            cell.delta,
            cell.n,
            m_values,
            config.H,
            config.grid_resolution,
            config.seed,
        )
        for rep in range(config.repetitions)
    ]
    keys = [(label, m) for m in m_values for label in _BERNSTEIN_LABELS]
    keys += [(label, None) for label in _EMPIRICAL_LABELS]
    counts = {(label, m): 0 for (label, m) in keys}
    for _, pvals in _map_tasks(tasks, _scan_repetition, workers, progress):
        for (label, m) in keys:
            if pvals[(label, m)] <= config.alpha:
                counts[(label, m)] += 1
    reps = config.repetitions
    rows = []
    for m in m_values:
        for label in _BERNSTEIN_LABELS:
            frac = counts[(label, m)] / reps
            rows.append((m, label, 100.0 * frac, 100.0 * math.sqrt(frac * (1 - frac) / reps)))
    for label in _EMPIRICAL_LABELS:
        frac = counts[(label, None)] / reps
        rows.append((None, label, 100.0 * frac, 100.0 * math.sqrt(frac * (1 - frac) / reps)))
    report = OrderScanReport(rows=rows, config=config, m_values=m_values, wall_seconds=time.monotonic() - t0)
    if out_dir is not None:
        report.write(out_dir)
    return report
