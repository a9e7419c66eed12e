import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.errors import AboveThreshold, BadParams, EmptyTable
from artifact.fault_model import uniform_tree
from artifact.threshold import (
    bad_bound, burst_mask, correlated_bad_bound, delta_closed_form, delta_for, effective_rate,
    effective_rate_exact, eta_c, eta_c_exact, eta_c_general, eta_c_universal, exact_sparse_probability,
    minimal_bad_count, monte_carlo_sparseness, rates_csv_rows, report, sparse_prob_bound,
)


def test_eta_c_values():
    assert eta_c_exact(100, 1) == Fraction(1, 4950)
    assert eta_c(5, 4) == 1.0
    assert 0.99e-6 <= eta_c(1414, 1) <= 1.01e-6
    assert eta_c_general(100, 1) == pytest.approx(3.716e-5, rel=1e-3)
    with pytest.raises(BadParams):
        eta_c_general(10, 0)
    with pytest.raises(BadParams):
        eta_c(2, 2)


@given(st.integers(2, 300), st.integers(1, 3))
def test_general_threshold_ratio(A, k):
    if A < k + 1:
        return
    assert eta_c_general(A, k) / eta_c(A, k) == pytest.approx(0.5 * math.exp(-k), rel=1e-12)


def test_eta_c_universal():
    grid = [1e-6, 2e-6, 5e-6]
    value, arg = eta_c_universal(1e-5, {d: 10 for d in grid})
    assert arg == 1e-6 and value == pytest.approx((1e-5 - 1e-6) / 10)
    assert eta_c_universal(1e-5, {3e-6: 4}) == ((1e-5 - 3e-6) / 4, 3e-6)
    # gate count falling with delta puts the optimum inside the grid
    table = {d: 1 / d**0.5 for d in np.linspace(1e-7, 9e-6, 50)}
    _, arg = eta_c_universal(1e-5, table)
    assert min(table) < arg < max(table)
    with pytest.raises(EmptyTable):
        eta_c_universal(1e-5, {})


def test_delta_for():
    assert delta_for(1e-4, 100, 1) == pytest.approx(math.log(0.495) / math.log(1e-4), abs=1e-8)
    assert delta_for(1e-4, 100, 1) == pytest.approx(0.0763, abs=1e-4)
    assert delta_for(1e-5, 100, 1) == pytest.approx(delta_closed_form(1e-5, 100, 1), abs=1e-8)
    assert delta_for(eta_c(100, 1) * (1 - 1e-9), 100, 1) < 1e-6
    with pytest.raises(AboveThreshold):
        delta_for(1e-3, 100, 1)


def test_sparse_prob_bound():
    assert sparse_prob_bound(1e-4, 0.05, 0) == pytest.approx(1 - 1e-4)
    assert sparse_prob_bound(1e-4, 0.05, 3) == pytest.approx(1 - 1e-4**1.157625, rel=1e-12)
    vals = [sparse_prob_bound(0.01, 0.1, r) for r in range(8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_effective_rate_values():
    rates = effective_rate(1e-4, 100, 1, 3)
    for got, want in zip(rates, (4.950e-5, 1.2129e-5, 7.28e-7)):
        assert got == pytest.approx(want, rel=1e-3)
    exact = effective_rate_exact(Fraction(1, 10_000), 100, 1, 3)
    assert [float(x) for x in exact] == pytest.approx(rates, rel=1e-12)
    fixed = effective_rate(eta_c(100, 1), 100, 1, 5)
    assert all(abs(x - eta_c(100, 1)) <= 1e-12 for x in fixed)
    assert effective_rate_exact(eta_c_exact(100, 1), 100, 1, 5) == [eta_c_exact(100, 1)] * 5


@pytest.mark.parametrize("A,k", [(100, 1), (20, 1), (10, 2)])
def test_rate_decreases_iff_below_threshold(A, k):
    # for k=1 the fixed point is eta_c; for general k it is C^(-1/k)
    fixed = math.comb(A, k + 1) ** (-1 / k)
    for eps0 in np.geomspace(fixed * 1e-3, min(fixed * 1e2, 0.999), 60):
        if abs(eps0 / fixed - 1) < 1e-9:
            continue
        seq = [eps0] + effective_rate(eps0, A, k, 3)
        decreasing = all(b < a for a, b in zip(seq, seq[1:]))
        assert decreasing == (eps0 < fixed)
        if k == 1:
            assert decreasing == (eps0 < eta_c(A, k))


def test_threshold_condition_equivalence_k1():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        A = int(rng.integers(2, 2000))
        eta = float(10 ** rng.uniform(-9, -0.5))
        assert (eta < eta_c(A, 1)) == (math.comb(A, 2) * eta**2 < eta)


def test_threshold_condition_differs_for_k2():
    # eta_c = C^-k is stricter than the one-step condition C eta^(k+1) < eta when k > 1
    A, k = 10, 2
    eta = 0.5 * math.comb(A, k + 1) ** (-1 / k)
    assert math.comb(A, k + 1) * eta ** (k + 1) < eta and eta > eta_c(A, k)


def test_bad_counts():
    assert minimal_bad_count(4, 1, 1) == (6, 6)
    bound, exact = minimal_bad_count(4, 1, 2)
    assert bound == 216 and exact is not None and exact <= bound
    assert bad_bound(7, 2, 0) == 1
    assert minimal_bad_count(3, 1, 0) == (1, 1)
    assert minimal_bad_count(20, 1, 3)[1] is None


def test_bad_bound_recursion():
    for A, k in [(4, 1), (6, 2), (10, 1)]:
        c = math.comb(A, k + 1)
        for r in range(4):
            assert bad_bound(A, k, r + 1) == c * bad_bound(A, k, r) ** (k + 1)


def test_correlated_bound():
    assert correlated_bad_bound(2, 1000, 100, 1, 1e-4, 2) == pytest.approx(2000 * 0.495**4, rel=1e-12)
    assert correlated_bad_bound(2, 1000, 100, 1, 1e-4, 2) == pytest.approx(120.1, abs=0.05)
    # 2000 * 0.495**16 = 0.02598 (the rounded 0.0247 often quoted for this case is off)
    assert correlated_bad_bound(2, 1000, 100, 1, 1e-4, 4) == pytest.approx(0.025984, abs=1e-6)
    assert correlated_bad_bound(1, 1, 100, 1, 1e-4, 0) == pytest.approx(0.495)
    with pytest.raises(AboveThreshold):
        correlated_bad_bound(1, 1, 100, 1, 1e-3, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 200), st.integers(1, 3), st.floats(0.01, 0.99), st.integers(0, 6))
def test_correlated_bound_decreasing(A, k, frac, r):
    A = max(A, k + 1)
    eta = frac / math.comb(A, k + 1) ** (1 / k)
    a = correlated_bad_bound(2, 100, A, k, eta, r)
    b = correlated_bad_bound(2, 100, A, k, eta, r + 1)
    assert b < a or (a == 0 and b == 0)


def test_monte_carlo_matches_exact():
    exact = 1 - exact_sparse_probability(20, 1, 0.01)
    assert exact == pytest.approx(0.01686, abs=5e-6)
    mc = monte_carlo_sparseness(uniform_tree(20, 1), 0.01, 1, 100_000, seed=11)
    sigma = math.sqrt(exact * (1 - exact) / mc.trials)
    assert abs((1 - mc.estimate) - exact) <= 3 * sigma


def test_monte_carlo_zero_noise_and_bound():
    assert monte_carlo_sparseness(uniform_tree(20, 1), 0.0, 1, 1000, seed=0).estimate == 1.0
    eta = 1e-3
    mc = monte_carlo_sparseness(uniform_tree(10, 2), eta, 1, 20_000, seed=4)
    assert mc.estimate >= sparse_prob_bound(eta, delta_for(eta, 10, 1), 2) - 3 * mc.stderr
    with pytest.raises(BadParams):
        monte_carlo_sparseness(uniform_tree(4, 1), 0.1, 1, 10, seed=0)


def test_monte_carlo_parallel_matches_serial():
    tree = uniform_tree(8, 2)
    a = monte_carlo_sparseness(tree, 0.02, 1, 20_000, seed=3, block=3000)
    b = monte_carlo_sparseness(tree, 0.02, 1, 20_000, seed=3, block=3000, jobs=2)
    assert a.estimate == b.estimate and a.blocks == b.blocks


def test_monte_carlo_burst_sampler():
    iid = monte_carlo_sparseness(uniform_tree(20, 1), 0.01, 1, 20_000, seed=2)
    burst = monte_carlo_sparseness(uniform_tree(20, 1), 0.01, 1, 20_000, seed=2, sampler=burst_mask(3.0))
    # clustered faults land in one rectangle more often
    assert burst.estimate < iid.estimate


def test_report_and_rows():
    rep = report(20, 1, 0.01, 1, monte_carlo_sparseness(uniform_tree(20, 1), 0.01, 1, 1000, seed=1))
    assert rep["eta_c"] == eta_c(20, 1)
    assert rep["exact_non_sparse"] == pytest.approx(0.01686, abs=5e-6)
    rows = rates_csv_rows(1e-4, 100, 1, 3)
    assert [r[0] for r in rows] == [0, 1, 2, 3] and rows[0][1] == 1e-4
    assert math.isnan(rates_csv_rows(1e-2, 100, 1, 1)[0][2])
