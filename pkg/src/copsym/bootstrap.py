"""Multiplier bootstrap for the symmetry statistics.

Each replicate reweights the observations with centered Exp(1) multipliers,
Bernstein-smooths (or not) the weighted empirical measure, removes the
margin effects through derivative plug-ins, symmetrizes, and applies the
same three functionals as the statistics themselves.  The p-value of a
statistic is the fraction of replicates at least as large as its scaled
value.

Replicate h always draws its multipliers from substream h of the test seed,
so results are identical no matter how replicates are scheduled, and a
column swap of the input leaves p-values unchanged (multipliers are keyed to
the observation index, which a swap preserves).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import backends, streams
from .errors import DataError
from .estimators import (
    BernsteinCopula,
    EmpiricalCopula,
    PseudoSample,
    Sample,
    bernstein_pmf_matrix,
    default_order,
    pseudo_observations,
    _survival_matrix,
)
from .symmetry import (
    GridSpec,
    StatisticTriple,
    as_grid,
    symmetry_statistics,
    symmetry_statistics_empirical,
)

__all__ = [
    "MultiplierDraw",
    "ReplicateSet",
    "TestResult",
    "draw_multipliers",
    "bbar_process",
    "replicate_process",
    "replicate_statistics",
    "run_test",
    "run_test_empirical",
]

_PVALUE_RULES = ("raw", "plus-one")


@dataclass(frozen=True)
class MultiplierDraw:
    """A vector of i.i.d. Exp(1) multipliers and its sample mean."""

    xi: np.ndarray
    xi_bar: float

    def __post_init__(self):
        xi = np.ascontiguousarray(self.xi, dtype=float)
        object.__setattr__(self, "xi", xi)
        if xi.ndim != 1 or xi.size < 2:
            raise ValueError("multiplier vector needs length >= 2")
        if np.any(xi <= 0):
            raise ValueError("Exp(1) multipliers must be positive")
        if abs(xi.mean() - self.xi_bar) > 1e-12:
            raise ValueError("stored multiplier mean does not match the vector")

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def centered(self) -> np.ndarray:
        return self.xi - self.xi_bar


def draw_multipliers(n: int, rng: np.random.Generator) -> MultiplierDraw:
    """n i.i.d. Exp(1) variates from the given stream (unit mean and unit
    variance, as the bootstrap requires)."""
    if n < 2:
        raise ValueError(f"need n >= 2 multipliers for centering, got {n}")
    xi = rng.standard_exponential(n)
    return MultiplierDraw(xi=xi, xi_bar=float(xi.mean()))


# ---------------------------------------------------------------------------
# processes (reference forms used by tests and small-scale work)
# ---------------------------------------------------------------------------

def _weighted_cell_grid(ps: PseudoSample, m: int, weights: np.ndarray) -> np.ndarray:
    """W[k, l] = (1/n) sum_i w_i 1(U_i <= k/m, V_i <= l/m)."""
    a, b = ps.cell_indices(m)
    flat = np.bincount(a * (m + 1) + b, weights=weights, minlength=(m + 1) ** 2)
    return flat.reshape(m + 1, m + 1).cumsum(axis=0).cumsum(axis=1) / ps.n


def bbar_process(ps: PseudoSample, m: int, draw: MultiplierDraw, u, v):
    """The multiplier-weighted Bernstein process at (u, v).

    sqrt(n)/n * sum_i (xi_i - xi_bar) * sum_{k,l} 1(U_i <= k/m, V_i <= l/m)
    P_mk(u) P_ml(v), evaluated by smoothing the weighted cell grid.
    """
    if draw.n != ps.n:
        raise ValueError("multiplier vector length must equal the sample size")
    w_grid = _weighted_cell_grid(ps, m, draw.centered)
    pu = bernstein_pmf_matrix(m, u)
    pv = bernstein_pmf_matrix(m, v)
    out = math.sqrt(ps.n) * np.einsum("...k,kl,...l->...", pu, w_grid, pv)
    return float(out) if out.ndim == 0 else out


def replicate_process(ps: PseudoSample, m: int, draw: MultiplierDraw, u, v):
    """Symmetrized bootstrap replicate at interior points (u, v).

    Composes B(u, v) = Bbar(u, v) - dC/du(u, v) Bbar(u, 1)
    - dC/dv(u, v) Bbar(1, v) and returns B(u, v) - B(v, u).  Boundary
    evaluation is rejected: the derivative plug-ins are defined on (0, 1)^2.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0) | (u >= 1)) or np.any((v <= 0) | (v >= 1)):
        raise ValueError("replicate process is defined on the open square (0, 1)^2")
    bc = BernsteinCopula(ps, m)
    w_grid = _weighted_cell_grid(ps, m, draw.centered)
    root_n = math.sqrt(ps.n)

    def bbar(s, t):
        pu = bernstein_pmf_matrix(m, s)
        pv = bernstein_pmf_matrix(m, t)
        return root_n * np.einsum("...k,kl,...l->...", pu, w_grid, pv)

    def b_process(s, t):
        ones = np.ones_like(s)
        return (
            bbar(s, t)
            - bc.partial_u(s, t) * bbar(s, ones)
            - bc.partial_v(s, t) * bbar(ones, t)
        )

    out = b_process(u, v) - b_process(v, u)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# kernel table construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _KernelTables:
    statistic: StatisticTriple
    tables: tuple[np.ndarray, ...]


def _bernstein_tables(ps: PseudoSample, m: int, grid: GridSpec) -> _KernelTables:
    nodes = grid.nodes
    bc = BernsteinCopula(ps, m)
    cell_a, cell_b = ps.cell_indices(m)

    sf_nodes = _survival_matrix(m, nodes)
    fu_grid = sf_nodes[:, cell_a]
    fv_grid = sf_nodes[:, cell_b]

    rows = bernstein_pmf_matrix(m, nodes)
    rows_m1 = bernstein_pmf_matrix(m - 1, nodes)
    du_grid = m * rows_m1 @ (bc.grid[1:, :] - bc.grid[:-1, :]) @ rows.T
    dv_grid = m * rows @ (bc.grid[:, 1:] - bc.grid[:, :-1]) @ rows_m1.T

    # clamp the evaluation points into the open square before the derivative
    # plug-ins; pseudo-observations sit on (0, 1] and can touch 1
    eps = 1.0 / (2.0 * ps.n)
    x = np.clip(ps.u, eps, 1.0 - eps)
    y = np.clip(ps.v, eps, 1.0 - eps)
    sf_x = _survival_matrix(m, x)
    sf_y = _survival_matrix(m, y)
    fu_x = sf_x[:, cell_a]
    fv_y = sf_y[:, cell_b]
    fu_y = sf_y[:, cell_a]
    fv_x = sf_x[:, cell_b]

    tables = (
        fu_grid,
        fv_grid,
        du_grid,
        dv_grid,
        fu_x * fv_y,
        fu_y * fv_x,
        fu_x,
        fv_y,
        fu_y,
        fv_x,
        bc.partial_u(x, y),
        bc.partial_v(x, y),
        bc.partial_u(y, x),
        bc.partial_v(y, x),
    )
    return _KernelTables(symmetry_statistics(ps, m, grid), tables)


def _empirical_tables(ps: PseudoSample, grid: GridSpec) -> _KernelTables:
    nodes = grid.nodes
    ec = EmpiricalCopula(ps)

    fu_grid = (ps.u[None, :] <= nodes[:, None]).astype(float)
    fv_grid = (ps.v[None, :] <= nodes[:, None]).astype(float)
    du_grid = ec.partial_u(nodes[:, None], nodes[None, :])
    dv_grid = ec.partial_v(nodes[:, None], nodes[None, :])

    x, y = ps.u, ps.v
    fu_x = (ps.u[None, :] <= x[:, None]).astype(float)
    fv_y = (ps.v[None, :] <= y[:, None]).astype(float)
    fu_y = (ps.u[None, :] <= y[:, None]).astype(float)
    fv_x = (ps.v[None, :] <= x[:, None]).astype(float)

    tables = (
        fu_grid,
        fv_grid,
        du_grid,
        dv_grid,
        fu_x * fv_y,
        fu_y * fv_x,
        fu_x,
        fv_y,
        fu_y,
        fv_x,
        ec.partial_u(x, y),
        ec.partial_v(x, y),
        ec.partial_u(y, x),
        ec.partial_v(y, x),
    )
    return _KernelTables(symmetry_statistics_empirical(ps, grid), tables)


def _run_kernel(ps: PseudoSample, tables: _KernelTables, xic: np.ndarray):
    return backends.replicate_stats_batch(xic, *tables.tables)


def replicate_statistics(
    ps: PseudoSample, m: int, grid: GridSpec | int | None, draw: MultiplierDraw
) -> tuple[float, float, float]:
    """One replicate triple: the three functionals of the symmetrized
    bootstrap process (replicates of n*R, n*S and sqrt(n)*T)."""
    if draw.n != ps.n:
        raise ValueError("multiplier vector length must equal the sample size")
    tables = _bernstein_tables(ps, m, as_grid(grid))
    xic = (draw.centered / math.sqrt(ps.n))[None, :]
    r, s, t = _run_kernel(ps, tables, xic)
    return float(r[0]), float(s[0]), float(t[0])


# ---------------------------------------------------------------------------
# full test runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicateSet:
    """Scaled replicate statistics for h = 1..H."""

    r: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        for name in ("r", "s", "t"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        if not (self.r.size == self.s.size == self.t.size) or self.r.size < 1:
            raise ValueError("replicate arrays must share a positive length")

    @property
    def H(self) -> int:
        return self.r.size


@dataclass(frozen=True)
class TestResult:
    """Outcome of one symmetry test: statistics, replicates, p-values."""

    statistics: StatisticTriple
    replicates: ReplicateSet
    p_r: float
    p_s: float
    p_t: float
    method: str
    m: int | None
    grid_resolution: int
    H: int
    seed: int
    pvalue_rule: str = "raw"
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return self.statistics.n

    @property
    def p_values(self) -> dict[str, float]:
        return {"r": self.p_r, "s": self.p_s, "t": self.p_t}

    def to_dict(self) -> dict:
        stats = {
            "r": {"value": self.statistics.r, "scaled": self.statistics.scaled_r, "p": self.p_r},
            "s": {"value": self.statistics.s, "scaled": self.statistics.scaled_s, "p": self.p_s},
            "t": {"value": self.statistics.t, "scaled": self.statistics.scaled_t, "p": self.p_t},
        }
        return {
            "n": self.n,
            "m": self.m,
            "grid": self.grid_resolution,
            "H": self.H,
            "seed": self.seed,
            "method": self.method,
            "pvalue_rule": self.pvalue_rule,
            "stats": stats,
            "warnings": list(self.warnings),
        }


def _pvalue(replicates: np.ndarray, observed: float, rule: str) -> float:
    exceed = int(np.count_nonzero(replicates >= observed))
    if rule == "raw":
        return exceed / replicates.size
    return (exceed + 1) / (replicates.size + 1)


def _centered_multiplier_rows(n: int, H: int, seed: int) -> np.ndarray:
    rows = np.empty((H, n))
    for h in range(H):
        draw = draw_multipliers(n, streams.stream(seed, "xi", h))
        rows[h] = draw.centered
    return rows / math.sqrt(n)


def _prepare_sample(sample, H: int) -> tuple[PseudoSample, tuple[str, ...]]:
    """Validate the input, rank-transform it, and collect warning notes."""
    if H < 1:
        raise ValueError(f"need H >= 1 multiplier replicates, got {H}")
    if isinstance(sample, PseudoSample):
        return sample, ()
    if not isinstance(sample, Sample):
        sample = Sample.from_pairs(np.asarray(sample))
    if sample.n < 10:
        raise DataError(f"need at least 10 observations, got {sample.n}")
    if np.all(sample.x == sample.x[0]) or np.all(sample.y == sample.y[0]):
        raise DataError("degenerate sample: a column is constant")
    notes: list[str] = []
    if sample.n < 30:
        msg = f"small sample (n={sample.n}); bootstrap p-values may be unstable"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        notes.append(msg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ps = pseudo_observations(sample)
    notes.extend(str(w.message) for w in caught)
    return ps, tuple(notes)


def run_test(
    sample,
    m: int | None = None,
    grid: GridSpec | int | None = None,
    H: int = 200,
    seed: int = 0,
    pvalue_rule: str = "raw",
) -> TestResult:
    """Bernstein symmetry test with multiplier-bootstrap p-values.

    ``sample`` may be a Sample, an (n, 2) array of raw pairs, or a
    PseudoSample.  ``m`` defaults to ceil(sqrt(n)).  The result is
    deterministic given ``seed`` regardless of scheduling.
    """
    if pvalue_rule not in _PVALUE_RULES:
        raise ValueError(f"pvalue_rule must be one of {_PVALUE_RULES}")
    ps, notes = _prepare_sample(sample, H)
    if m is None:
        m = default_order(ps.n)
    grid = as_grid(grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tables = _bernstein_tables(ps, m, grid)
    notes += tuple(str(w.message) for w in caught)
    xic = _centered_multiplier_rows(ps.n, H, seed)
    r, s, t = _run_kernel(ps, tables, xic)
    stat = tables.statistic
    return TestResult(
        statistics=stat,
        replicates=ReplicateSet(r=r, s=s, t=t),
        p_r=_pvalue(r, stat.scaled_r, pvalue_rule),
        p_s=_pvalue(s, stat.scaled_s, pvalue_rule),
        p_t=_pvalue(t, stat.scaled_t, pvalue_rule),
        method="bernstein",
        m=m,
        grid_resolution=grid.resolution,
        H=H,
        seed=seed,
        pvalue_rule=pvalue_rule,
        warnings=notes,
    )


def run_test_empirical(
    sample,
    grid: GridSpec | int | None = None,
    H: int = 200,
    seed: int = 0,
    pvalue_rule: str = "raw",
) -> TestResult:
    """Empirical-copula symmetry test (the unsmoothed baseline).

    Same bootstrap scheme as :func:`run_test`, with the step-function
    estimator and central-difference derivative plug-ins of bandwidth
    n**-0.5.
    """
    if pvalue_rule not in _PVALUE_RULES:
        raise ValueError(f"pvalue_rule must be one of {_PVALUE_RULES}")
    ps, notes = _prepare_sample(sample, H)
    grid = as_grid(grid)
    tables = _empirical_tables(ps, grid)
    xic = _centered_multiplier_rows(ps.n, H, seed)
    r, s, t = _run_kernel(ps, tables, xic)
    stat = tables.statistic
    return TestResult(
        statistics=stat,
        replicates=ReplicateSet(r=r, s=s, t=t),
        p_r=_pvalue(r, stat.scaled_r, pvalue_rule),
        p_s=_pvalue(s, stat.scaled_s, pvalue_rule),
        p_t=_pvalue(t, stat.scaled_t, pvalue_rule),
        method="empirical",
        m=None,
        grid_resolution=grid.resolution,
        H=H,
        seed=seed,
        pvalue_rule=pvalue_rule,
        warnings=notes,
    )
