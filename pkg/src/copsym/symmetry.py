"""Rank statistics for the exchange-symmetry hypothesis C(u, v) = C(v, u).

Three functionals of the difference D(u, v) = C_hat(u, v) - C_hat(v, u):

* ``stat_r``: the squared difference integrated over the unit square
  (midpoint rule on an N x N grid),
* ``stat_s``: the squared difference averaged over the pseudo-observations
  (the empirical-measure integral is exactly that sample average),
* ``stat_t``: the largest absolute difference over the grid.

Each exists with the Bernstein-smoothed estimator and with the raw
empirical copula.  All computations go through the antisymmetrized
coefficient matrix, so exchangeable samples give exact zeros and swapping
the two data columns leaves every statistic unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    BernsteinCopula,
    EmpiricalCopula,
    PseudoSample,
    bernstein_pmf_matrix,
)

__all__ = [
    "GridSpec",
    "StatisticTriple",
    "stat_r",
    "stat_s",
    "stat_t",
    "stat_r_empirical",
    "stat_s_empirical",
    "stat_t_empirical",
    "symmetry_statistics",
    "symmetry_statistics_empirical",
]


@dataclass(frozen=True)
class GridSpec:
    """Midpoint evaluation grid: nodes (2i - 1)/(2N), i = 1..N.

    Nodes stay strictly inside (0, 1), where the derivative plug-ins used by
    the bootstrap are well behaved and the statistic and its replicates share
    one evaluation set.
    """

    resolution: int = 20

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"grid resolution must be >= 2, got {self.resolution}")

    @property
    def nodes(self) -> np.ndarray:
        n = self.resolution
        return (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)


def as_grid(grid: GridSpec | int | None) -> GridSpec:
    if grid is None:
        return GridSpec()
    if isinstance(grid, GridSpec):
        return grid
    return GridSpec(int(grid))


@dataclass(frozen=True)
class StatisticTriple:
    """The three statistic values plus the scalings used by the bootstrap."""

    r: float
    s: float
    t: float
    n: int

    @property
    def scaled_r(self) -> float:
        return self.n * self.r

    @property
    def scaled_s(self) -> float:
        return self.n * self.s

    @property
    def scaled_t(self) -> float:
        return math.sqrt(self.n) * self.t


# ---------------------------------------------------------------------------
# difference fields
# ---------------------------------------------------------------------------

def _bernstein_diff_grid(ps: PseudoSample, m: int, grid: GridSpec) -> np.ndarray:
    """D(g_i, g_j) on the grid via the antisymmetric part of the coefficient
    matrix; exactly zero for exchangeable samples."""
    bc = BernsteinCopula(ps, m)
    anti = bc.grid - bc.grid.T
    rows = bernstein_pmf_matrix(m, grid.nodes)
    return rows @ anti @ rows.T


def _bernstein_diff_at_points(ps: PseudoSample, m: int) -> np.ndarray:
    bc = BernsteinCopula(ps, m)
    anti = bc.grid - bc.grid.T
    pu = bernstein_pmf_matrix(m, ps.u)
    pv = bernstein_pmf_matrix(m, ps.v)
    return np.einsum("ik,kl,il->i", pu, anti, pv)


def _empirical_diff_grid(ps: PseudoSample, grid: GridSpec) -> np.ndarray:
    counts = EmpiricalCopula(ps).node_matrix(grid.nodes)
    return counts - counts.T


def _empirical_diff_at_points(ps: PseudoSample) -> np.ndarray:
    # pairwise domination counts; integer-valued before the 1/n scaling
    le_uu = ps.u[None, :] <= ps.u[:, None]
    le_vv = ps.v[None, :] <= ps.v[:, None]
    le_uv = ps.u[None, :] <= ps.v[:, None]
    le_vu = ps.v[None, :] <= ps.u[:, None]
    straight = (le_uu & le_vv).sum(axis=1)
    crossed = (le_uv & le_vu).sum(axis=1)
    return (straight - crossed) / ps.n


def _mean_square(values: np.ndarray) -> float:
    # sort before summing so permuting the observations cannot change the
    # floating-point result
    flat = np.sort(np.square(values), axis=None)
    return float(flat.sum() / flat.size)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def stat_r(ps: PseudoSample, m: int, grid: GridSpec | int | None = None) -> float:
    """Midpoint-rule approximation of the integrated squared difference of
    the Bernstein copula."""
    return _mean_square(_bernstein_diff_grid(ps, m, as_grid(grid)))


def stat_s(ps: PseudoSample, m: int) -> float:
    """Squared Bernstein difference averaged over the pseudo-observations."""
    return _mean_square(_bernstein_diff_at_points(ps, m))


def stat_t(ps: PseudoSample, m: int, grid: GridSpec | int | None = None) -> float:
    """Largest absolute Bernstein difference over the grid."""
    return float(np.abs(_bernstein_diff_grid(ps, m, as_grid(grid))).max())


def stat_r_empirical(ps: PseudoSample, grid: GridSpec | int | None = None) -> float:
    return _mean_square(_empirical_diff_grid(ps, as_grid(grid)))


def stat_s_empirical(ps: PseudoSample) -> float:
    return _mean_square(_empirical_diff_at_points(ps))


def stat_t_empirical(ps: PseudoSample, grid: GridSpec | int | None = None) -> float:
    return float(np.abs(_empirical_diff_grid(ps, as_grid(grid))).max())


def symmetry_statistics(
    ps: PseudoSample, m: int, grid: GridSpec | int | None = None
) -> StatisticTriple:
    """All three Bernstein statistics, sharing the grid evaluation."""
    grid = as_grid(grid)
    dg = _bernstein_diff_grid(ps, m, grid)
    dp = _bernstein_diff_at_points(ps, m)
    return StatisticTriple(
        r=_mean_square(dg),
        s=_mean_square(dp),
        t=float(np.abs(dg).max()),
        n=ps.n,
    )


def symmetry_statistics_empirical(
    ps: PseudoSample, grid: GridSpec | int | None = None
) -> StatisticTriple:
    """The empirical-copula counterparts of the three statistics."""
    grid = as_grid(grid)
    dg = _empirical_diff_grid(ps, grid)
    dp = _empirical_diff_at_points(ps)
    return StatisticTriple(
        r=_mean_square(dg),
        s=_mean_square(dp),
        t=float(np.abs(dg).max()),
        n=ps.n,
    )
