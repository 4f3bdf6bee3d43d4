import math
import warnings

import numpy as np
import pytest

from copsym import backends, streams
from copsym.bootstrap import (
    MultiplierDraw,
    bbar_process,
    draw_multipliers,
    replicate_process,
    replicate_statistics,
    run_test,
    run_test_empirical,
    _bernstein_tables,
    _centered_multiplier_rows,
    _empirical_tables,
)
from copsym.errors import DataError
from copsym.estimators import (
    BernsteinCopula,
    PseudoSample,
    Sample,
    bernstein_pmf,
    pseudo_observations,
)
from copsym.symmetry import as_grid

THREE_POINT = PseudoSample(np.array([1 / 3, 2 / 3, 1.0]), np.array([2 / 3, 1.0, 1 / 3]))


def make_sample(rng, n, dependence=0.0):
    x = rng.random(n)
    y = dependence * x + (1 - dependence) * rng.random(n)
    return Sample(x, y)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

def test_multiplier_moments():
    draw = draw_multipliers(100_000, streams.stream(3, "xi", 0))
    assert draw.xi_bar == pytest.approx(1.0, abs=0.01)
    assert draw.xi.var() == pytest.approx(1.0, abs=0.02)
    assert np.all(draw.xi > 0)


def test_multiplier_determinism():
    a = draw_multipliers(64, streams.stream(9, "xi", 4))
    b = draw_multipliers(64, streams.stream(9, "xi", 4))
    assert np.array_equal(a.xi, b.xi)


def test_multiplier_validation():
    with pytest.raises(ValueError):
        draw_multipliers(1, streams.stream(0))
    with pytest.raises(ValueError):
        MultiplierDraw(xi=np.array([1.0, -0.5]), xi_bar=0.25)
    with pytest.raises(ValueError):
        MultiplierDraw(xi=np.array([1.0, 2.0]), xi_bar=0.4)


# ---------------------------------------------------------------------------
# weighted process
# ---------------------------------------------------------------------------

def test_bbar_hand_expansion():
    # n = 3, m = 1, fixed multipliers: compare to the written-out double sum
    draw = MultiplierDraw(xi=np.array([2.0, 1.0, 0.5]), xi_bar=3.5 / 3)
    m = 1

    def brute(u, v):
        total = 0.0
        for i in range(3):
            for k in range(m + 1):
                for l in range(m + 1):
                    total += (
                        (draw.xi[i] - draw.xi_bar)
                        * (THREE_POINT.u[i] <= k / m)
                        * (THREE_POINT.v[i] <= l / m)
                        * bernstein_pmf(m, k, u)
                        * bernstein_pmf(m, l, v)
                    )
        return math.sqrt(3.0) / 3.0 * total

    for u, v in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1), (0.123, 0.456)]:
        assert bbar_process(THREE_POINT, m, draw, u, v) == pytest.approx(brute(u, v), abs=1e-12)


def test_bbar_boundary_zeros(rng):
    ps = pseudo_observations(make_sample(rng, 25))
    draw = draw_multipliers(25, streams.stream(7, "xi", 0))
    for v in (0.0, 0.3, 1.0):
        assert abs(bbar_process(ps, 6, draw, 0.0, v)) <= 1e-12
        assert abs(bbar_process(ps, 6, draw, v, 0.0)) <= 1e-12
    assert abs(bbar_process(ps, 6, draw, 1.0, 1.0)) <= 1e-12


def test_replicate_process_constant_multipliers_vanish(rng):
    ps = pseudo_observations(make_sample(rng, 12))
    draw = MultiplierDraw(xi=np.full(12, 1.7), xi_bar=1.7)
    for u, v in rng.random((5, 2)) * 0.98 + 0.01:
        assert replicate_process(ps, 4, draw, u, v) == 0.0


def test_replicate_process_antisymmetric(rng):
    ps = pseudo_observations(make_sample(rng, 18))
    draw = draw_multipliers(18, streams.stream(1, "xi", 2))
    for u, v in rng.random((10, 2)) * 0.98 + 0.01:
        a = replicate_process(ps, 5, draw, u, v)
        b = replicate_process(ps, 5, draw, v, u)
        assert abs(a + b) <= 1e-12
    assert replicate_process(ps, 5, draw, 0.42, 0.42) == 0.0


def test_replicate_process_rejects_boundary(rng):
    ps = pseudo_observations(make_sample(rng, 11))
    draw = draw_multipliers(11, streams.stream(1, "xi", 0))
    for bad in [(0.0, 0.5), (0.5, 1.0), (1.0, 1.0)]:
        with pytest.raises(ValueError, match="open square"):
            replicate_process(ps, 3, draw, *bad)


def test_replicate_process_compositional_oracle(rng):
    # direct composition of bbar_process and the analytic partials
    ps = pseudo_observations(make_sample(rng, 10))
    draw = draw_multipliers(10, streams.stream(2, "xi", 5))
    m = 2
    bc = BernsteinCopula(ps, m)

    def oracle(u, v):
        def b(s, t):
            return (
                bbar_process(ps, m, draw, s, t)
                - bc.partial_u(s, t) * bbar_process(ps, m, draw, s, 1.0)
                - bc.partial_v(s, t) * bbar_process(ps, m, draw, 1.0, t)
            )

        return b(u, v) - b(v, u)

    for u, v in [(0.3, 0.7), (0.25, 0.5), (0.9, 0.65)]:
        assert replicate_process(ps, m, draw, u, v) == pytest.approx(oracle(u, v), abs=1e-12)


# ---------------------------------------------------------------------------
# replicate statistics
# ---------------------------------------------------------------------------

def naive_replicate_statistics(ps, m, grid, draw):
    """Reference implementation straight from the definitions."""
    nodes = as_grid(grid).nodes
    values = np.array(
        [[replicate_process(ps, m, draw, a, b) for b in nodes] for a in nodes]
    )
    r = float((values**2).mean())
    t = float(np.abs(values).max())
    eps = 1.0 / (2.0 * ps.n)
    x = np.clip(ps.u, eps, 1.0 - eps)
    y = np.clip(ps.v, eps, 1.0 - eps)
    s = float(
        np.mean([replicate_process(ps, m, draw, xi, yi) ** 2 for xi, yi in zip(x, y)])
    )
    return r, s, t


def test_replicate_statistics_against_reference(rng):
    sample = make_sample(rng, 20, dependence=0.5)
    ps = pseudo_observations(sample)
    draw = draw_multipliers(20, streams.stream(13, "xi", 1))
    got = replicate_statistics(ps, 5, 10, draw)
    want = naive_replicate_statistics(ps, 5, 10, draw)
    assert got == pytest.approx(want, abs=1e-10)


def test_replicate_statistics_nonnegative_and_zero_for_constant(rng):
    ps = pseudo_observations(make_sample(rng, 15))
    const = MultiplierDraw(xi=np.full(15, 0.9), xi_bar=0.9)
    assert replicate_statistics(ps, 4, 10, const) == (0.0, 0.0, 0.0)
    draw = draw_multipliers(15, streams.stream(4, "xi", 7))
    r, s, t = replicate_statistics(ps, 4, 10, draw)
    assert r >= 0 and s >= 0 and t >= 0


# ---------------------------------------------------------------------------
# backend parity
# ---------------------------------------------------------------------------

@pytest.mark.skipif(len(backends.available_backends()) < 2, reason="extension not built")
def test_backends_agree(rng):
    sample = make_sample(rng, 45, dependence=0.4)
    ps = pseudo_observations(sample)
    xic = _centered_multiplier_rows(45, 32, seed=5)
    for tables in (_bernstein_tables(ps, 7, as_grid(15)), _empirical_tables(ps, as_grid(15))):
        results = {}
        for name in backends.available_backends():
            backends.set_backend(name)
            results[name] = backends.replicate_stats_batch(xic, *tables.tables)
        backends.set_backend(None)
        for a, b in zip(results["compiled"], results["numpy"]):
            assert np.allclose(a, b, rtol=0, atol=1e-10)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

def test_run_test_symmetric_sample_full_pvalues(rng):
    pairs = rng.random((12, 2))
    both = np.concatenate([pairs, pairs[:, ::-1]])
    res = run_test(both, m=4, grid=10, H=40, seed=2)
    assert res.statistics.r == 0.0 and res.statistics.t == 0.0
    assert res.p_r == 1.0 and res.p_t == 1.0
    rese = run_test_empirical(both, grid=10, H=40, seed=2)
    assert rese.p_r == 1.0 and rese.p_t == 1.0


def test_run_test_deterministic(rng):
    sample = make_sample(rng, 40, dependence=0.6)
    a = run_test(sample, m=6, grid=10, H=60, seed=11)
    b = run_test(sample, m=6, grid=10, H=60, seed=11)
    assert a.to_dict() == b.to_dict()
    assert np.array_equal(a.replicates.r, b.replicates.r)
    c = run_test(sample, m=6, grid=10, H=60, seed=12)
    assert not np.array_equal(a.replicates.r, c.replicates.r)


def test_pvalues_are_multiples_of_inverse_H(rng):
    sample = make_sample(rng, 35, dependence=0.7)
    res = run_test(sample, m=6, grid=10, H=40, seed=3)
    for p in (res.p_r, res.p_s, res.p_t):
        assert p == pytest.approx(round(p * 40) / 40, abs=1e-12)


def test_pvalue_plus_one_rule(rng):
    sample = make_sample(rng, 35, dependence=0.2)
    raw = run_test(sample, m=6, grid=10, H=40, seed=3)
    adj = run_test(sample, m=6, grid=10, H=40, seed=3, pvalue_rule="plus-one")
    for p_raw, p_adj in zip(raw.p_values.values(), adj.p_values.values()):
        assert p_adj == pytest.approx((p_raw * 40 + 1) / 41, abs=1e-12)
    with pytest.raises(ValueError):
        run_test(sample, m=6, H=40, pvalue_rule="bogus")


def test_column_swap_leaves_pvalues(rng):
    sample = make_sample(rng, 50, dependence=0.65)
    swapped = Sample(sample.y, sample.x)
    a = run_test(sample, m=7, grid=20, H=100, seed=21)
    b = run_test(swapped, m=7, grid=20, H=100, seed=21)
    assert a.p_values == b.p_values
    ae = run_test_empirical(sample, grid=20, H=100, seed=21)
    be = run_test_empirical(swapped, grid=20, H=100, seed=21)
    assert ae.p_values == be.p_values


def test_run_test_input_validation(rng):
    with pytest.raises(DataError, match="at least 10"):
        run_test(rng.random((5, 2)), H=10)
    xs = rng.random(15)
    with pytest.raises(DataError, match="constant"):
        run_test(Sample(np.full(15, 2.0), xs), H=10)
    with pytest.raises(ValueError):
        run_test(rng.random((15, 2)), H=0)
    with pytest.warns(RuntimeWarning, match="small sample"):
        run_test(rng.random((15, 2)), m=3, grid=5, H=5, seed=0)


def test_warnings_recorded_in_result(rng):
    x = np.round(rng.random(40), 1)  # heavy ties
    y = rng.random(40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_test(Sample(x, y), m=6, grid=10, H=20, seed=1)
    assert any("mid-ranks" in w for w in res.warnings)


def test_empirical_test_determinism_and_metadata(rng):
    sample = make_sample(rng, 45, dependence=0.5)
    a = run_test_empirical(sample, grid=15, H=30, seed=9)
    b = run_test_empirical(sample, grid=15, H=30, seed=9)
    assert a.to_dict() == b.to_dict()
    assert a.method == "empirical"
    assert a.m is None
    assert a.H == 30 and a.grid_resolution == 15


@pytest.mark.slow
def test_null_pvalues_roughly_uniform():
    # Frank tau=0.25 null: the p-value CDF at 0.05 must not exceed uniform
    # by more than binomial noise (the test runs conservative)
    from copsym.models import parse_spec_token, sample_copula

    spec = parse_spec_token("frank:tau=0.25")
    reps, H, n, m = 200, 100, 100, 13
    hits = np.zeros(3)
    for rep in range(reps):
        pairs = sample_copula(spec, n, streams.derive_seed(500, "null", rep))
        res = run_test(pairs, m=m, grid=20, H=H, seed=streams.derive_seed(501, "null", rep))
        hits += [res.p_r <= 0.05, res.p_s <= 0.05, res.p_t <= 0.05]
    rates = hits / reps
    se = math.sqrt(0.05 * 0.95 / reps)
    assert np.all(rates <= 0.05 + 3 * se)
