import numpy as np
import pytest

from copsym.estimators import (
    BernsteinCopula,
    EmpiricalCopula,
    PseudoSample,
    Sample,
    pseudo_observations,
)
from copsym.models import CopulaSpec, Family, copula_cdf, sample_copula, tau_to_param
from copsym.symmetry import (
    GridSpec,
    stat_r,
    stat_r_empirical,
    stat_s,
    stat_s_empirical,
    stat_t,
    stat_t_empirical,
    symmetry_statistics,
    symmetry_statistics_empirical,
)
from copsym import streams

THREE_POINT = PseudoSample(np.array([1 / 3, 2 / 3, 1.0]), np.array([2 / 3, 1.0, 1 / 3]))


def swap_symmetric_pseudo(rng, half):
    pairs = rng.random((half, 2))
    both = np.concatenate([pairs, pairs[:, ::-1]])
    return pseudo_observations(Sample(both[:, 0], both[:, 1]))


def test_grid_spec():
    grid = GridSpec(20)
    assert grid.nodes[0] == 0.025 and grid.nodes[-1] == 0.975
    assert np.all((grid.nodes > 0) & (grid.nodes < 1))
    with pytest.raises(ValueError):
        GridSpec(1)


def test_statistic_triple_scalings():
    trip = symmetry_statistics(THREE_POINT, 2, 20)
    assert trip.scaled_r == 3 * trip.r
    assert trip.scaled_s == 3 * trip.s
    assert trip.scaled_t == pytest.approx(np.sqrt(3) * trip.t, abs=1e-15)


def test_swap_symmetric_sample_gives_exact_zeros(rng):
    ps = swap_symmetric_pseudo(rng, 12)
    trip = symmetry_statistics(ps, 5, 20)
    assert (trip.r, trip.s, trip.t) == (0.0, 0.0, 0.0)
    tripe = symmetry_statistics_empirical(ps, 20)
    assert (tripe.r, tripe.s, tripe.t) == (0.0, 0.0, 0.0)


def test_single_point_sample_is_symmetric():
    ps = PseudoSample(np.array([1.0]), np.array([1.0]))
    assert stat_r(ps, 3, 10) == 0.0
    assert stat_s(ps, 3) == 0.0
    assert stat_t(ps, 3, 10) == 0.0


def test_three_point_matches_brute_force():
    m, N = 2, 20
    nodes = GridSpec(N).nodes
    bc = BernsteinCopula(THREE_POINT, m)
    diff = np.array([[bc.cdf(a, b) - bc.cdf(b, a) for b in nodes] for a in nodes])
    assert stat_r(THREE_POINT, m, N) == pytest.approx((diff**2).sum() / N**2, abs=1e-12)
    assert stat_t(THREE_POINT, m, N) == pytest.approx(np.abs(diff).max(), abs=1e-15)
    brute_s = np.mean(
        [(bc.cdf(u, v) - bc.cdf(v, u)) ** 2 for u, v in zip(THREE_POINT.u, THREE_POINT.v)]
    )
    assert stat_s(THREE_POINT, m) == pytest.approx(brute_s, abs=1e-12)


def test_three_point_empirical_matches_brute_force():
    N = 20
    nodes = GridSpec(N).nodes
    ec = EmpiricalCopula(THREE_POINT)
    diff = np.array([[ec.cdf(a, b) - ec.cdf(b, a) for b in nodes] for a in nodes])
    assert stat_r_empirical(THREE_POINT, N) == pytest.approx((diff**2).sum() / N**2, abs=1e-12)
    assert stat_t_empirical(THREE_POINT, N) == pytest.approx(np.abs(diff).max(), abs=1e-15)
    brute_s = np.mean(
        [(ec.cdf(u, v) - ec.cdf(v, u)) ** 2 for u, v in zip(THREE_POINT.u, THREE_POINT.v)]
    )
    assert stat_s_empirical(THREE_POINT) == pytest.approx(brute_s, abs=1e-12)


def test_nonnegative_and_t_bounded(rng):
    ps = pseudo_observations(Sample(rng.random(30), rng.random(30)))
    trip = symmetry_statistics(ps, 6, 20)
    for value in (trip.r, trip.s, trip.t):
        assert value >= 0.0
    assert trip.t <= 1.0
    tripe = symmetry_statistics_empirical(ps, 20)
    assert tripe.t <= 1.0


def test_column_swap_leaves_statistics(rng):
    ps = pseudo_observations(Sample(rng.random(41), rng.random(41)))
    a = symmetry_statistics(ps, 7, 20)
    b = symmetry_statistics(ps.swapped(), 7, 20)
    assert a == b
    ae = symmetry_statistics_empirical(ps, 20)
    be = symmetry_statistics_empirical(ps.swapped(), 20)
    assert ae == be


def test_observation_order_invariance_bit_identical(rng):
    x, y = rng.random(37), rng.random(37)
    perm = rng.permutation(37)
    a = symmetry_statistics(pseudo_observations(Sample(x, y)), 6, 20)
    b = symmetry_statistics(pseudo_observations(Sample(x[perm], y[perm])), 6, 20)
    assert a == b


def test_monotone_transform_invariance(rng):
    x, y = rng.random(29), rng.random(29)
    a = symmetry_statistics(pseudo_observations(Sample(x, y)), 5, 20)
    b = symmetry_statistics(
        pseudo_observations(Sample(np.exp(3 * x), y**3 - 2 * y**2 + 5 * y)), 5, 20
    )
    assert a == b


def test_r_bounded_by_t_squared(rng):
    for _ in range(10):
        n = int(rng.integers(5, 60))
        ps = pseudo_observations(Sample(rng.random(n), rng.random(n)))
        m = int(rng.integers(1, 12))
        assert stat_r(ps, m, 20) <= stat_t(ps, m, 20) ** 2 + 1e-12
        assert stat_r_empirical(ps, 20) <= stat_t_empirical(ps, 20) ** 2 + 1e-12


def test_refinement_stability(rng):
    # midpoint rule at N=20 vs N=200 on a smooth integrand
    for _ in range(5):
        n = int(rng.integers(30, 201))
        m = int(rng.integers(2, 16))
        pairs = rng.random((n, 2))
        pairs[:, 1] = 0.6 * pairs[:, 0] + 0.4 * pairs[:, 1]  # correlate a bit
        ps = pseudo_observations(Sample(pairs[:, 0], pairs[:, 1]))
        coarse = stat_r(ps, m, 20)
        fine = stat_r(ps, m, 200)
        assert abs(coarse - fine) <= 5e-3


@pytest.mark.slow
def test_statistic_converges_to_population_functional():
    # under a fixed alternative the statistic approaches the population
    # squared-difference integral as n grows
    spec = CopulaSpec(Family.CLAYTON, tau_to_param(Family.CLAYTON, 0.7), delta=0.5)
    quad_nodes = (2.0 * np.arange(1, 501) - 1.0) / 1000.0
    cc = copula_cdf(spec, quad_nodes[:, None], quad_nodes[None, :])
    population_r = float(((cc - cc.T) ** 2).mean())

    medians = []
    for n in (100, 400, 1600):
        m = int(np.ceil(np.sqrt(n)))
        vals = []
        for rep in range(50):
            pairs = sample_copula(spec, n, streams.derive_seed(55, "stat-cons", n, rep))
            ps = pseudo_observations(Sample(pairs[:, 0], pairs[:, 1]))
            vals.append(stat_r(ps, m, 20))
        medians.append(np.median(vals))
    errors = [abs(v - population_r) for v in medians]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.25 * population_r
