"""Rank transforms, the empirical copula, and its Bernstein smoothing.

The Bernstein estimator of order m smooths the empirical copula through
tensor-product binomial weights

    C_nm(u, v) = sum_{k,l} C_n(k/m, l/m) * P_mk(u) * P_ml(v),

where P_mk is the binomial(m, u) mass function.  Being a polynomial it has
exact analytic partial derivatives, which the bootstrap needs.  Each
estimator object precomputes the (m+1)^2 grid of empirical-copula values
once and is immutable afterwards, so evaluations are pure and safe to share
across workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import comb, gammaln, xlog1py, xlogy
from scipy.stats import rankdata

from .errors import DataError

__all__ = [
    "Sample",
    "PseudoSample",
    "pseudo_observations",
    "default_order",
    "bernstein_pmf",
    "bernstein_pmf_matrix",
    "EmpiricalCopula",
    "BernsteinCopula",
    "empirical_copula",
    "bernstein_copula",
    "bernstein_partial_u",
    "bernstein_partial_v",
]

# direct binomial products are exact up to here; beyond, work in log space
_LOGSPACE_ORDER = 30


@dataclass(frozen=True)
class Sample:
    """Raw bivariate observations, the input of every test."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise DataError("sample needs two equal-length 1-d columns")
        if x.size < 1:
            raise DataError("sample must contain at least one pair")
        for name, col in (("x", x), ("y", y)):
            bad = np.flatnonzero(~np.isfinite(col))
            if bad.size:
                raise DataError(f"non-finite value in column {name} at index {bad[0]}")

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def from_pairs(cls, pairs) -> "Sample":
        pairs = np.asarray(pairs, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DataError(f"expected an (n, 2) array of pairs, got shape {pairs.shape}")
        return cls(pairs[:, 0], pairs[:, 1])


@dataclass(frozen=True)
class PseudoSample:
    """Rank-transformed pairs on (0, 1]^2; coordinates are mid-ranks over n."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=float)
        v = np.ascontiguousarray(self.v, dtype=float)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if u.ndim != 1 or u.shape != v.shape or u.size < 1:
            raise DataError("pseudo-sample needs two equal-length 1-d columns")
        if np.any((u <= 0) | (u > 1)) or np.any((v <= 0) | (v > 1)):
            raise DataError("pseudo-observations must lie in (0, 1]")
        # coordinates must sit on the mid-rank grid k/(2n), or exact cell
        # assignment below would be meaningless
        two_n = 2 * u.size
        for col in (u, v):
            if np.max(np.abs(col * two_n - np.rint(col * two_n))) > 1e-9:
                raise DataError("pseudo-observations must be mid-ranks over n")

    @property
    def n(self) -> int:
        return self.u.size

    def swapped(self) -> "PseudoSample":
        return PseudoSample(self.v, self.u)

    def cell_indices(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Smallest grid indices (a, b) with u_i <= a/m and v_i <= b/m.

        Computed in integer arithmetic on doubled ranks, so boundary cases
        like u_i == k/m never fall on the wrong side of a float comparison.
        """
        two_n = 2 * self.n
        ru = np.rint(self.u * two_n).astype(np.int64)
        rv = np.rint(self.v * two_n).astype(np.int64)
        a = -((-m * ru) // two_n)
        b = -((-m * rv) // two_n)
        return a, b


def pseudo_observations(sample: Sample | np.ndarray) -> PseudoSample:
    """Mid-rank pseudo-observations U_i = rank(x_i)/n, V_i = rank(y_i)/n.

    Ties get the average of their positions; a RuntimeWarning reports the
    tied fraction per column when any ties are present.
    """
    if not isinstance(sample, Sample):
        sample = Sample.from_pairs(sample)
    n = sample.n
    ru = rankdata(sample.x, method="average")
    rv = rankdata(sample.y, method="average")
    frac_x = _tied_fraction(sample.x)
    frac_y = _tied_fraction(sample.y)
    if frac_x > 0 or frac_y > 0:
        warnings.warn(
            f"ties resolved by mid-ranks (tied fraction: x={frac_x:.3f}, y={frac_y:.3f})",
            RuntimeWarning,
            stacklevel=2,
        )
    return PseudoSample(ru / n, rv / n)


def _tied_fraction(column: np.ndarray) -> float:
    _, counts = np.unique(column, return_counts=True)
    return float(counts[counts > 1].sum()) / column.size


def default_order(n: int) -> int:
    """Default Bernstein order ceil(sqrt(n))."""
    return math.isqrt(n - 1) + 1 if n > 1 else 1


# ---------------------------------------------------------------------------
# Binomial weights
# ---------------------------------------------------------------------------

def bernstein_pmf_matrix(m: int, u) -> np.ndarray:
    """Rows of binomial(m, u) masses: shape u.shape + (m+1,).

    Exact products for m <= 30; log space beyond that so large orders
    neither overflow nor lose the exact endpoint values.
    """
    if m < 0:
        raise ValueError("order must be >= 0")
    u = np.asarray(u, dtype=float)
    k = np.arange(m + 1, dtype=float)
    uu = u[..., None]
    if m <= _LOGSPACE_ORDER:
        with np.errstate(invalid="ignore"):
            out = comb(m, k) * uu ** k * (1.0 - uu) ** (m - k)
        return out
    log_binom = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
    with np.errstate(invalid="ignore"):
        out = np.exp(log_binom + xlogy(k, uu) + xlog1py(m - k, -uu))
    return out


def bernstein_pmf(m: int, k: int, u):
    """Binomial mass P_mk(u) = C(m, k) u^k (1-u)^(m-k)."""
    if not 0 <= k <= m:
        raise ValueError(f"k must lie in [0, {m}], got {k}")
    rows = bernstein_pmf_matrix(m, u)
    return rows[..., k] if rows.ndim > 1 else float(rows[k])


def _survival_matrix(m: int, u) -> np.ndarray:
    """S[..., j] = sum_{k >= j} P_mk(u): upper tails of the binomial rows."""
    pmf = bernstein_pmf_matrix(m, u)
    return np.cumsum(pmf[..., ::-1], axis=-1)[..., ::-1]


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

class EmpiricalCopula:
    """Step-function estimator: the proportion of pseudo-observations in a
    lower quadrant."""

    def __init__(self, ps: PseudoSample):
        self.ps = ps
        self.n = ps.n

    def cdf(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        scalar = u.ndim == 0 and v.ndim == 0
        u, v = np.broadcast_arrays(u, v)
        hit = (self.ps.u <= u[..., None]) & (self.ps.v <= v[..., None])
        out = hit.sum(axis=-1) / self.n
        return float(out) if scalar else out

    def grid_matrix(self, m: int) -> np.ndarray:
        """Values C_n(k/m, l/m) for k, l = 0..m, computed by exact counting."""
        a, b = self.ps.cell_indices(m)
        counts = np.bincount(a * (m + 1) + b, minlength=(m + 1) ** 2).reshape(m + 1, m + 1)
        return counts.cumsum(axis=0).cumsum(axis=1) / self.n

    def node_matrix(self, nodes: np.ndarray) -> np.ndarray:
        """Values C_n(nodes[i], nodes[j]) via a cumulative 2-d histogram."""
        nodes = np.asarray(nodes, dtype=float)
        k = nodes.size
        a = np.searchsorted(nodes, self.ps.u, side="left")
        b = np.searchsorted(nodes, self.ps.v, side="left")
        counts = np.bincount(a * (k + 1) + b, minlength=(k + 1) ** 2).reshape(k + 1, k + 1)
        return counts.cumsum(axis=0).cumsum(axis=1)[:k, :k] / self.n

    def partial_u(self, u, v, bandwidth: float | None = None):
        """Central-difference estimate of dC/du with arguments clamped to
        [h, 1-h]; h defaults to n**-0.5."""
        h = self.n ** -0.5 if bandwidth is None else bandwidth
        u = np.clip(np.asarray(u, dtype=float), h, 1.0 - h)
        return (self.cdf(u + h, v) - self.cdf(u - h, v)) / (2.0 * h)

    def partial_v(self, u, v, bandwidth: float | None = None):
        h = self.n ** -0.5 if bandwidth is None else bandwidth
        v = np.clip(np.asarray(v, dtype=float), h, 1.0 - h)
        return (self.cdf(u, v + h) - self.cdf(u, v - h)) / (2.0 * h)


class BernsteinCopula:
    """Bernstein smoothing of the empirical copula at a fixed order m.

    The (m+1)^2 coefficient grid is computed once at construction; ``cdf``,
    ``partial_u`` and ``partial_v`` are then pure polynomial evaluations.
    """

    def __init__(self, ps: PseudoSample, m: int):
        if m < 1:
            raise ValueError(f"Bernstein order must be >= 1, got {m}")
        if m > ps.n:
            warnings.warn(
                f"Bernstein order m={m} exceeds the sample size n={ps.n}",
                RuntimeWarning,
                stacklevel=2,
            )
        self.ps = ps
        self.m = int(m)
        self.n = ps.n
        self.grid = EmpiricalCopula(ps).grid_matrix(self.m)
        self._grid_t = np.ascontiguousarray(self.grid.T)

    def cdf(self, u, v):
        pu = bernstein_pmf_matrix(self.m, u)
        pv = bernstein_pmf_matrix(self.m, v)
        # averaging both orientations makes swapping the sample's columns and
        # the arguments bit-exact inverses of each other
        out = 0.5 * (
            np.einsum("...k,kl,...l->...", pu, self.grid, pv)
            + np.einsum("...k,kl,...l->...", pv, self._grid_t, pu)
        )
        return float(out) if out.ndim == 0 else out

    def partial_u(self, u, v):
        """Exact derivative of the smoothing polynomial in u."""
        diff = self.grid[1:, :] - self.grid[:-1, :]
        pu = bernstein_pmf_matrix(self.m - 1, u)
        pv = bernstein_pmf_matrix(self.m, v)
        out = self.m * np.einsum("...k,kl,...l->...", pu, diff, pv)
        return float(out) if out.ndim == 0 else out

    def partial_v(self, u, v):
        diff = self.grid[:, 1:] - self.grid[:, :-1]
        pu = bernstein_pmf_matrix(self.m, u)
        pv = bernstein_pmf_matrix(self.m - 1, v)
        out = self.m * np.einsum("...k,kl,...l->...", pu, diff, pv)
        return float(out) if out.ndim == 0 else out


# functional forms of the estimator operations

def empirical_copula(ps: PseudoSample, u, v):
    return EmpiricalCopula(ps).cdf(u, v)


def bernstein_copula(ps: PseudoSample, m: int, u, v):
    return BernsteinCopula(ps, m).cdf(u, v)


def bernstein_partial_u(ps: PseudoSample, m: int, u, v):
    return BernsteinCopula(ps, m).partial_u(u, v)


def bernstein_partial_v(ps: PseudoSample, m: int, u, v):
    return BernsteinCopula(ps, m).partial_v(u, v)
