"""Parametric bivariate copulas used to drive the simulation studies.

Provides the five stock families (independence, Gaussian, Clayton, Gumbel,
Frank, Student), a Kendall-tau parameterization, exact samplers, and the
Khoudraji power transform that turns a symmetric base copula into an
asymmetric one:

    K_delta(u, v) = u**delta * C(u**(1 - delta), v),   delta in [0, 1].

All CDF evaluations are vectorized and satisfy the copula boundary conditions
exactly; samplers are exact (no MCMC) and reproducible from a seed via
counter-based streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri, owens_t
from scipy.stats import t as _student_t

from . import streams
from .errors import ConfigError

__all__ = [
    "Family",
    "CopulaSpec",
    "parse_spec_token",
    "tau_to_param",
    "copula_cdf",
    "sample_copula",
]


class Family(enum.Enum):
    INDEPENDENCE = "independence"
    GAUSSIAN = "gaussian"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    STUDENT = "student"

    def __str__(self) -> str:
        return self.value


# Kendall-tau ranges each family can attain.
_TAU_RANGE = {
    Family.INDEPENDENCE: (0.0, 0.0),
    Family.GAUSSIAN: (-1.0, 1.0),
    Family.STUDENT: (-1.0, 1.0),
    Family.CLAYTON: (0.0, 1.0),
    Family.GUMBEL: (0.0, 1.0),
    Family.FRANK: (-1.0, 1.0),
}

_FRANK_THETA_MAX = 100.0


def _check_theta(family: Family, theta: float) -> None:
    if family in (Family.GAUSSIAN, Family.STUDENT):
        if not -1.0 < theta < 1.0:
            raise ValueError(f"{family} correlation must lie in (-1, 1), got {theta}")
    elif family is Family.CLAYTON:
        if not theta > 0.0:
            raise ValueError(f"clayton requires theta > 0, got {theta}")
    elif family is Family.GUMBEL:
        if not theta >= 1.0:
            raise ValueError(f"gumbel requires theta >= 1, got {theta}")
    elif family is Family.FRANK:
        if theta == 0.0:
            raise ValueError("frank requires theta != 0")


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family with its parameter and optional asymmetrization.

    ``delta`` is the Khoudraji exponent; ``None`` means the plain base
    copula.  ``nu`` is the Student degrees of freedom and is ignored by the
    other families.
    """

    family: Family
    theta: float = 0.0
    delta: float | None = None
    nu: float = 4.0

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(str(self.family).lower()))
        _check_theta(self.family, self.theta)
        if self.delta is not None and not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if self.family is Family.STUDENT and not self.nu > 0:
            raise ValueError(f"student requires nu > 0, got {self.nu}")

    @property
    def base(self) -> "CopulaSpec":
        return self if self.delta is None else CopulaSpec(self.family, self.theta, None, self.nu)

    def to_token(self) -> str:
        parts = [self.family.value, f"theta={self.theta!r}"]
        if self.family is Family.STUDENT:
            parts.append(f"nu={self.nu!r}")
        if self.delta is not None:
            parts.append(f"delta={self.delta!r}")
        return ":".join(parts)

    @classmethod
    def from_token(cls, token: str) -> "CopulaSpec":
        return parse_spec_token(token)


def parse_spec_token(token: str) -> CopulaSpec:
    """Parse a plain-text spec token such as ``gumbel:tau=0.7:delta=0.5``.

    Case-insensitive.  The parameter may be given either as ``theta=`` or as
    ``tau=`` (converted through :func:`tau_to_param`); ``nu=`` sets the
    Student degrees of freedom and ``delta=`` the asymmetry exponent.
    """
    parts = [p.strip() for p in token.strip().lower().split(":") if p.strip()]
    if not parts:
        raise ConfigError("empty copula spec token")
    try:
        family = Family(parts[0])
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown copula family {parts[0]!r} (known: {known})") from None
    theta = None
    tau = None
    delta = None
    nu = 4.0
    for part in parts[1:]:
        if "=" not in part:
            raise ConfigError(f"malformed spec field {part!r} in {token!r}")
        key, _, value = part.partition("=")
        key = key.strip()
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"non-numeric value in spec field {part!r}") from None
        if key == "theta":
            theta = value
        elif key == "tau":
            tau = value
        elif key == "delta":
            delta = value
        elif key == "nu":
            nu = value
        else:
            raise ConfigError(f"unknown spec field {key!r} in {token!r}")
    if theta is not None and tau is not None:
        raise ConfigError(f"give either theta or tau, not both: {token!r}")
    if theta is None:
        if tau is not None:
            theta = tau_to_param(family, tau)
        elif family is Family.INDEPENDENCE:
            theta = 0.0
        else:
            raise ConfigError(f"spec token {token!r} needs theta= or tau=")
    return CopulaSpec(family, theta, delta, nu)


# ---------------------------------------------------------------------------
# Kendall's tau parameterization
# ---------------------------------------------------------------------------

def _debye1(theta: float) -> float:
    """First Debye function D1(theta) = (1/theta) * int_0^theta t/(e^t - 1) dt."""

    def integrand(t):
        return t / math.expm1(t) if t != 0.0 else 1.0

    value, _ = integrate.quad(integrand, 0.0, theta, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value / theta


def frank_tau(theta: float) -> float:
    """Kendall's tau of the Frank copula with parameter theta != 0."""
    if theta == 0.0:
        return 0.0
    return 1.0 + 4.0 * (_debye1(theta) - 1.0) / theta


def tau_to_param(family: Family | str, tau: float) -> float:
    """Parameter giving the family Kendall's tau ``tau``.

    Closed forms for Gaussian/Student (rho = sin(pi*tau/2)), Clayton
    (2*tau/(1-tau)) and Gumbel (1/(1-tau)); Frank is inverted numerically
    through the Debye-function relation to absolute tolerance 1e-10.
    """
    if not isinstance(family, Family):
        family = Family(str(family).lower())
    lo, hi = _TAU_RANGE[family]
    if family is Family.INDEPENDENCE:
        if tau != 0.0:
            raise ValueError("independence copula has Kendall tau 0 only")
        return 0.0
    if not lo < tau < hi:
        raise ValueError(
            f"Kendall tau {tau} is outside the attainable range ({lo}, {hi}) for {family}"
        )
    if family in (Family.GAUSSIAN, Family.STUDENT):
        return math.sin(math.pi * tau / 2.0)
    if family is Family.CLAYTON:
        return 2.0 * tau / (1.0 - tau)
    if family is Family.GUMBEL:
        return 1.0 / (1.0 - tau)
    # Frank: tau(theta) is odd and increasing in theta; bisect on |tau|.
    sign = 1.0 if tau > 0 else -1.0
    target = abs(tau)
    lo_t, hi_t = 1e-6, _FRANK_THETA_MAX
    if frank_tau(hi_t) < target:
        raise ValueError(
            f"Kendall tau {tau} is outside the invertible Frank range "
            f"(|tau| <= {frank_tau(hi_t):.4f})"
        )
    while hi_t - lo_t > 1e-10:
        mid = 0.5 * (lo_t + hi_t)
        if frank_tau(mid) < target:
            lo_t = mid
        else:
            hi_t = mid
    return sign * 0.5 * (lo_t + hi_t)


# ---------------------------------------------------------------------------
# CDFs
# ---------------------------------------------------------------------------

def _bvn_cdf(x, y, rho):
    """Exact bivariate standard normal CDF via Owen's T (Owen, 1956)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = math.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ax = (y - rho * x) / (x * s)
        ay = (x - rho * y) / (y * s)
        # x == 0 (or y == 0) sends the slope to +/- inf, which owens_t accepts
        ax = np.where(x == 0.0, np.inf * np.sign(y - rho * x), ax)
        ay = np.where(y == 0.0, np.inf * np.sign(x - rho * y), ay)
        beta = np.where((x * y < 0.0) | ((x * y == 0.0) & (x + y < 0.0)), 0.5, 0.0)
        out = 0.5 * (ndtr(x) + ndtr(y)) - owens_t(x, ax) - owens_t(y, ay) - beta
    both_zero = (x == 0.0) & (y == 0.0)
    if np.any(both_zero):
        out = np.where(both_zero, 0.25 + math.asin(rho) / (2.0 * math.pi), out)
    return out


def _bvt_cdf_scalar(x: float, y: float, rho: float, nu: float) -> float:
    # conditional of a bivariate t: (Y | X = z) is a rescaled t with nu+1 dof;
    # integrating over the smaller coordinate keeps the swap symmetry exact.
    if x > y:
        x, y = y, x
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    s2 = 1.0 - rho * rho

    def integrand(z):
        scale = math.sqrt((nu + z * z) * s2 / (nu + 1.0))
        return _student_t.pdf(z, nu) * _student_t.cdf((y - rho * z) / scale, nu + 1.0)

    value, _ = integrate.quad(integrand, -np.inf, x, epsabs=1e-13, epsrel=1e-12, limit=200)
    return min(max(value, 0.0), 1.0)


_bvt_cdf = np.vectorize(_bvt_cdf_scalar, otypes=[float])


def _base_cdf(spec: CopulaSpec, u, v):
    """CDF of the base family (no asymmetrization), with exact boundaries."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    family, theta = spec.family, spec.theta
    if family is Family.INDEPENDENCE:
        return u * v

    # evaluate the interior formula on clipped arguments, then overwrite the
    # boundary cases so C(u,0)=0, C(u,1)=u, ... hold exactly
    tiny = 1e-300
    ui = np.clip(u, tiny, 1.0 - 1e-16)
    vi = np.clip(v, tiny, 1.0 - 1e-16)
    with np.errstate(all="ignore"):
        if family is Family.GAUSSIAN:
            inner = _bvn_cdf(ndtri(ui), ndtri(vi), theta)
        elif family is Family.STUDENT:
            inner = _bvt_cdf(_student_t.ppf(ui, spec.nu), _student_t.ppf(vi, spec.nu), theta, spec.nu)
        elif family is Family.CLAYTON:
            inner = (ui ** (-theta) + vi ** (-theta) - 1.0) ** (-1.0 / theta)
        elif family is Family.GUMBEL:
            inner = np.exp(-((-np.log(ui)) ** theta + (-np.log(vi)) ** theta) ** (1.0 / theta))
        elif family is Family.FRANK:
            inner = -np.log1p(np.expm1(-theta * ui) * np.expm1(-theta * vi) / np.expm1(-theta)) / theta
        else:  # pragma: no cover
            raise ValueError(f"unhandled family {family}")
    out = np.where(u == 1.0, v, np.where(v == 1.0, u, inner))
    out = np.where((u == 0.0) | (v == 0.0), 0.0, out)
    out = np.where((u == 1.0) & (v == 1.0), 1.0, out)
    return out


def copula_cdf(spec: CopulaSpec, u, v):
    """C(u, v) for the given spec, applying the Khoudraji transform if set.

    Accepts scalars or broadcastable arrays with entries in [0, 1]; returns
    a float for scalar input.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    scalar = u.ndim == 0 and v.ndim == 0
    delta = spec.delta
    if delta is None or delta == 0.0:
        out = _base_cdf(spec.base, u, v)
    elif delta == 1.0:
        out = u * v
    else:
        out = u ** delta * _base_cdf(spec.base, u ** (1.0 - delta), v)
        # keep the uniform-margin boundaries exact through the power transform
        out = np.where(v == 1.0, u, out)
        out = np.where(u == 1.0, v, out)
        out = np.where((u == 0.0) | (v == 0.0), 0.0, out)
        out = np.where((u == 1.0) & (v == 1.0), 1.0, out)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def _positive_stable(alpha: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Positive alpha-stable draws with Laplace transform exp(-t**alpha).

    Chambers-Mallows-Stuck construction, valid for alpha in (0, 1).
    """
    angle = rng.uniform(0.0, math.pi, size)
    expo = rng.standard_exponential(size)
    return (
        np.sin(alpha * angle) / np.sin(angle) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * angle) / expo) ** ((1.0 - alpha) / alpha)
    )


def _sample_base(spec: CopulaSpec, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    family, theta = spec.family, spec.theta
    if family is Family.INDEPENDENCE:
        return rng.random(n), rng.random(n)
    if family is Family.GAUSSIAN:
        z = rng.standard_normal((n, 2))
        x = z[:, 0]
        y = theta * z[:, 0] + math.sqrt(1.0 - theta * theta) * z[:, 1]
        return ndtr(x), ndtr(y)
    if family is Family.STUDENT:
        z = rng.standard_normal((n, 2))
        x = z[:, 0]
        y = theta * z[:, 0] + math.sqrt(1.0 - theta * theta) * z[:, 1]
        w = np.sqrt(spec.nu / rng.chisquare(spec.nu, n))
        return _student_t.cdf(x * w, spec.nu), _student_t.cdf(y * w, spec.nu)
    if family is Family.CLAYTON:
        # Gamma frailty (Marshall-Olkin): psi(t) = (1 + t)**(-1/theta)
        frailty = rng.standard_gamma(1.0 / theta, n)
        e = rng.standard_exponential((n, 2))
        return (
            (1.0 + e[:, 0] / frailty) ** (-1.0 / theta),
            (1.0 + e[:, 1] / frailty) ** (-1.0 / theta),
        )
    if family is Family.GUMBEL:
        if theta == 1.0:
            return rng.random(n), rng.random(n)
        alpha = 1.0 / theta
        frailty = _positive_stable(alpha, rng, n)
        e = rng.standard_exponential((n, 2))
        return (
            np.exp(-((e[:, 0] / frailty) ** alpha)),
            np.exp(-((e[:, 1] / frailty) ** alpha)),
        )
    if family is Family.FRANK:
        # closed-form conditional inversion of dC/du
        u = rng.random(n)
        w = rng.random(n)
        a = np.exp(-theta * u)
        b = 1.0 + w * math.expm1(-theta) / (a - w * (a - 1.0))
        return u, -np.log(b) / theta
    raise ValueError(f"unhandled family {family}")  # pragma: no cover


def sample_copula(spec: CopulaSpec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. pairs from the copula; returns an (n, 2) array.

    Deterministic given ``seed``.  With an asymmetrizing ``delta`` the pair is
    built by the max construction: draw (x1, v) from the base copula and an
    independent uniform x2, then u = max(x1**(1/(1-delta)), x2**(1/delta)).
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = streams.stream(seed, "copula-sample")
    x1, v = _sample_base(spec.base, n, rng)
    delta = spec.delta
    if delta is None or delta == 0.0:
        return np.column_stack([x1, v])
    x2 = rng.random(n)
    if delta == 1.0:
        return np.column_stack([x2, v])
    u = np.maximum(x1 ** (1.0 / (1.0 - delta)), x2 ** (1.0 / delta))
    return np.column_stack([u, v])
