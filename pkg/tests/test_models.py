import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import ndtr, ndtri
from scipy.stats import kendalltau

from copsym.errors import ConfigError
from copsym.models import (
    CopulaSpec,
    Family,
    copula_cdf,
    frank_tau,
    parse_spec_token,
    sample_copula,
    tau_to_param,
)
from copsym.models import _positive_stable
from copsym import streams

ALL_TOKENS = [
    "independence",
    "gaussian:tau=0.5",
    "clayton:tau=0.5",
    "gumbel:tau=0.5",
    "frank:tau=0.5",
    "student:tau=0.5:nu=4",
]


# ---------------------------------------------------------------------------
# Kendall tau parameterization
# ---------------------------------------------------------------------------

def test_tau_closed_forms():
    assert tau_to_param(Family.CLAYTON, 0.5) == pytest.approx(2.0, abs=1e-12)
    assert tau_to_param(Family.GUMBEL, 0.5) == pytest.approx(2.0, abs=1e-12)
    # rho = sin(pi/4)
    assert tau_to_param(Family.GAUSSIAN, 0.5) == pytest.approx(0.7071067811865476, abs=1e-10)
    assert tau_to_param(Family.STUDENT, 0.5) == pytest.approx(0.7071067811865476, abs=1e-10)


def test_frank_tau_inversion_round_trip():
    for tau in (0.25, 0.5, 0.7, 0.9, -0.4):
        theta = tau_to_param(Family.FRANK, tau)
        assert frank_tau(theta) == pytest.approx(tau, abs=1e-9)


def test_tau_domain_errors_name_family_and_range():
    with pytest.raises(ValueError, match="clayton"):
        tau_to_param(Family.CLAYTON, -0.2)
    with pytest.raises(ValueError, match="gumbel"):
        tau_to_param(Family.GUMBEL, 1.0)
    with pytest.raises(ValueError):
        tau_to_param(Family.GAUSSIAN, 1.5)
    with pytest.raises(ValueError):
        tau_to_param(Family.INDEPENDENCE, 0.3)


# ---------------------------------------------------------------------------
# CDFs
# ---------------------------------------------------------------------------

def test_independence_cdf():
    spec = CopulaSpec(Family.INDEPENDENCE)
    assert copula_cdf(spec, 0.5, 0.5) == pytest.approx(0.25, abs=1e-15)


def test_khoudraji_clayton_closed_form():
    # K = sqrt(0.25) * (0.5**-2 + 0.25**-2 - 1)**-0.5 = 0.5 / sqrt(19)
    spec = CopulaSpec(Family.CLAYTON, 2.0, delta=0.5)
    assert copula_cdf(spec, 0.25, 0.25) == pytest.approx(0.5 / math.sqrt(19.0), abs=1e-10)


@pytest.mark.parametrize("token", ALL_TOKENS)
def test_boundary_conditions_exact(token):
    spec = parse_spec_token(token)
    for u in (0.0, 0.2, 0.5, 0.77, 1.0):
        assert abs(copula_cdf(spec, u, 0.0)) <= 1e-12
        assert abs(copula_cdf(spec, 0.0, u)) <= 1e-12
        assert abs(copula_cdf(spec, u, 1.0) - u) <= 1e-12
        assert abs(copula_cdf(spec, 1.0, u) - u) <= 1e-12


@pytest.mark.parametrize("token", ALL_TOKENS)
def test_base_families_symmetric(token):
    spec = parse_spec_token(token)
    pts = np.random.default_rng(3).random((25, 2))
    for u, v in pts:
        assert abs(copula_cdf(spec, u, v) - copula_cdf(spec, v, u)) <= 1e-12


@pytest.mark.parametrize("token", ALL_TOKENS)
def test_two_increasing_rectangles(token):
    spec = parse_spec_token(token)
    spec = CopulaSpec(spec.family, spec.theta, delta=0.4, nu=spec.nu)
    rng = np.random.default_rng(8)
    n_rect = 12 if spec.family is Family.STUDENT else 40
    for _ in range(n_rect):
        u1, u2 = np.sort(rng.random(2))
        v1, v2 = np.sort(rng.random(2))
        mass = (
            copula_cdf(spec, u2, v2)
            - copula_cdf(spec, u2, v1)
            - copula_cdf(spec, u1, v2)
            + copula_cdf(spec, u1, v1)
        )
        assert mass >= -1e-12


def test_khoudraji_limits_match_base_and_independence():
    base = CopulaSpec(Family.GUMBEL, 2.0)
    with_zero = CopulaSpec(Family.GUMBEL, 2.0, delta=0.0)
    with_one = CopulaSpec(Family.GUMBEL, 2.0, delta=1.0)
    pts = np.random.default_rng(4).random((30, 2))
    for u, v in pts:
        assert abs(copula_cdf(with_zero, u, v) - copula_cdf(base, u, v)) <= 1e-12
        assert abs(copula_cdf(with_one, u, v) - u * v) <= 1e-12


def test_gaussian_cdf_against_quadrature():
    # independent oracle: integrate the conditional normal over the first
    # coordinate
    rho = tau_to_param(Family.GAUSSIAN, 0.5)
    spec = CopulaSpec(Family.GAUSSIAN, rho)
    s = math.sqrt(1.0 - rho * rho)

    def oracle(u, v):
        x, y = ndtri(u), ndtri(v)
        val, _ = integrate.quad(
            lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * ndtr((y - rho * z) / s),
            -np.inf,
            x,
            epsabs=1e-12,
        )
        return val

    rng = np.random.default_rng(5)
    for u, v in rng.random((10, 2)):
        assert copula_cdf(spec, u, v) == pytest.approx(oracle(u, v), abs=1e-10)
    # center point has a closed form: 1/4 + asin(rho)/(2 pi)
    assert copula_cdf(spec, 0.5, 0.5) == pytest.approx(
        0.25 + math.asin(rho) / (2 * math.pi), abs=1e-13
    )


def test_student_cdf_center_closed_form():
    rho = tau_to_param(Family.STUDENT, 0.5)
    spec = CopulaSpec(Family.STUDENT, rho, nu=4.0)
    assert copula_cdf(spec, 0.5, 0.5) == pytest.approx(
        0.25 + math.asin(rho) / (2 * math.pi), abs=1e-10
    )


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_clayton_cdf_bounds(u, v):
    spec = CopulaSpec(Family.CLAYTON, 2.0)
    c = copula_cdf(spec, u, v)
    # Frechet-Hoeffding bounds
    assert max(u + v - 1.0, 0.0) - 1e-12 <= c <= min(u, v) + 1e-12


# ---------------------------------------------------------------------------
# spec tokens
# ---------------------------------------------------------------------------

def test_token_round_trip():
    for token in ["gumbel:tau=0.7:delta=0.5", "student:tau=0.5:nu=4:delta=0.25"]:
        spec = parse_spec_token(token)
        again = parse_spec_token(spec.to_token())
        assert again == spec


def test_token_case_insensitive():
    a = parse_spec_token("GUMBEL:TAU=0.7:DELTA=0.5")
    b = parse_spec_token("gumbel:tau=0.7:delta=0.5")
    assert a == b


def test_token_errors():
    with pytest.raises(ConfigError):
        parse_spec_token("gumbo:tau=0.5")
    with pytest.raises(ConfigError):
        parse_spec_token("gumbel:tau=0.5:theta=2")
    with pytest.raises(ConfigError):
        parse_spec_token("gumbel")
    with pytest.raises(ConfigError):
        parse_spec_token("gumbel:tau=abc")


def test_spec_validation():
    with pytest.raises(ValueError):
        CopulaSpec(Family.CLAYTON, -1.0)
    with pytest.raises(ValueError):
        CopulaSpec(Family.GUMBEL, 0.5)
    with pytest.raises(ValueError):
        CopulaSpec(Family.GAUSSIAN, 1.5)
    with pytest.raises(ValueError):
        CopulaSpec(Family.FRANK, 0.0)
    with pytest.raises(ValueError):
        CopulaSpec(Family.CLAYTON, 2.0, delta=1.5)
    with pytest.raises(ValueError):
        CopulaSpec(Family.STUDENT, 0.5, nu=-1.0)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def test_sampler_rejects_empty():
    with pytest.raises(ValueError):
        sample_copula(CopulaSpec(Family.INDEPENDENCE), 0, seed=1)


def test_sampler_reproducible_byte_exact():
    spec = parse_spec_token("gumbel:tau=0.7:delta=0.5")
    a = sample_copula(spec, 512, seed=99)
    b = sample_copula(spec, 512, seed=99)
    assert a.tobytes() == b.tobytes()
    c = sample_copula(spec, 512, seed=100)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize(
    "token", ["clayton:tau=0.5", "gumbel:tau=0.5", "frank:tau=0.5",
              "gaussian:tau=0.5", "student:tau=0.5:nu=4"]
)
def test_sample_kendall_tau_consistency(token):
    # tau estimator on 10^4 draws concentrates within +-0.03 of the target
    spec = parse_spec_token(token)
    pairs = sample_copula(spec, 10_000, seed=31)
    tau_hat = kendalltau(pairs[:, 0], pairs[:, 1]).statistic
    assert abs(tau_hat - 0.5) < 0.03


def test_khoudraji_sampler_matches_cdf_pointwise():
    spec = CopulaSpec(Family.CLAYTON, 2.0, delta=0.5)
    pairs = sample_copula(spec, 10_000, seed=17)
    emp = np.mean((pairs[:, 0] <= 0.25) & (pairs[:, 1] <= 0.25))
    assert emp == pytest.approx(0.5 / math.sqrt(19.0), abs=0.01)


def test_khoudraji_sampler_delta_limits():
    base = sample_copula(CopulaSpec(Family.CLAYTON, 2.0), 64, seed=5)
    zero = sample_copula(CopulaSpec(Family.CLAYTON, 2.0, delta=0.0), 64, seed=5)
    assert np.array_equal(base, zero)
    one = sample_copula(CopulaSpec(Family.CLAYTON, 2.0, delta=1.0), 50_000, seed=5)
    # independence: tau near zero
    assert abs(kendalltau(one[:, 0], one[:, 1]).statistic) < 0.01


def test_positive_stable_laplace_transform():
    # E exp(-t S) = exp(-t**alpha) for the frailty draws behind the Gumbel
    # sampler
    alpha = 0.5
    s = _positive_stable(alpha, streams.stream(12, "stable"), 200_000)
    for t in (0.5, 1.0, 2.0):
        expected = math.exp(-(t ** alpha))
        observed = np.exp(-t * s).mean()
        assert observed == pytest.approx(expected, abs=0.004)


@pytest.mark.parametrize("token", ALL_TOKENS)
def test_sampler_matches_cdf_on_grid(token):
    # sup distance between the ecdf of 10^5 draws and the model CDF on a
    # 10 x 10 grid, within 3x the 95% Kolmogorov-Smirnov band
    spec = parse_spec_token(token)
    n = 100_000
    pairs = sample_copula(spec, n, seed=8)
    nodes = (2.0 * np.arange(1, 11) - 1.0) / 20.0
    band = 3.0 * 1.358 / math.sqrt(n)
    worst = 0.0
    for u in nodes:
        inside_u = pairs[:, 0] <= u
        for v in nodes:
            emp = np.mean(inside_u & (pairs[:, 1] <= v))
            worst = max(worst, abs(emp - copula_cdf(spec, u, v)))
    assert worst < band


def test_sampler_khoudraji_grid():
    spec = CopulaSpec(Family.GUMBEL, tau_to_param(Family.GUMBEL, 0.7), delta=0.5)
    n = 100_000
    pairs = sample_copula(spec, n, seed=21)
    nodes = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    band = 3.0 * 1.358 / math.sqrt(n)
    for u in nodes:
        for v in nodes:
            emp = np.mean((pairs[:, 0] <= u) & (pairs[:, 1] <= v))
            assert abs(emp - copula_cdf(spec, u, v)) < band
