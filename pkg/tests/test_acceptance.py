"""Acceptance run: one test per criterion, each reporting a single pass/fail line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
at the end of the session (see ``conftest.py``).
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from artifact.cli import parse_program
from artifact.concat import lemma_check, recursive_majority, simulate_r
from artifact.fault_model import is_sparse, uniform_tree
from artifact.gadgets.library import (
    degree_reduction_gadget, ec_gadget, fourier_gadget, toffoli_gadget_poly, transversal_gadget,
)
from artifact.gadgets.spread import measure_spread
from artifact.gadgets.verify import FIDELITY_TOL, verify_gadget
from artifact.layout1d import routed_gadget
from artifact.quantum_codes import codeword, ideal_ec, logical_state, univ_commutator_check
from artifact.state_sim import (
    apply_channel_purified, apply_unitary, pauli_matrix, pure_density, random_channel, trace_distance,
)
from artifact.threshold import (
    correlated_bad_bound, effective_rate, effective_rate_exact, eta_c, eta_c_exact, eta_c_general,
    exact_sparse_probability, minimal_bad_count, monte_carlo_sparseness,
)

STEANE_TRANSVERSAL = ["not", "cnot", "phase", "cphase", "h", "swap"]
POLY_TRANSVERSAL = [("gnot", 1), ("gnot", 3), ("gcnot", 1), ("swap", 1), ("mult", 2), ("gphase", 1), ("fourier", 1)]


@pytest.fixture
def verdict(record_property):
    """Collects the detail text that the summary line shows for this criterion."""
    start = time.perf_counter()
    notes = []

    def note(text):
        notes.append(text)
        record_property("detail", "; ".join(notes) + f" [{time.perf_counter() - start:.1f} s]")

    return note


def _within(budget, start):
    elapsed = time.perf_counter() - start
    assert elapsed < budget, f"took {elapsed:.0f} s, budget {budget} s"


def _nonzero_errors(p):
    return [(c, c2) for c in range(p) for c2 in range(p) if (c, c2) != (0, 0)]


def _support_trace_distance(mixed, target):
    """Trace norm of rho - |t><t| computed on the basis rows the two states touch.

    Both operators vanish outside that span, so this equals the full-register
    value without building a p**n matrix.
    """
    rows = {}
    for s in [target] + mixed.branches:
        for row in map(tuple, s.digits):
            rows.setdefault(row, len(rows))

    def vec(s):
        v = np.zeros(len(rows), dtype=complex)
        v[[rows[tuple(r)] for r in s.digits]] = s.amps
        return v

    t = vec(target)
    t /= np.linalg.norm(t)
    rho = sum(np.outer(vec(b), vec(b).conj()) for b in mixed.branches) / mixed.total_weight()
    diff = rho - np.outer(t, t.conj())
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


# 1
def test_criterion_01_threshold_formula(verdict):
    assert eta_c_exact(100, 1) == Fraction(1, 4950)
    general = eta_c_general(100, 1)
    assert abs(general - 0.5 * math.exp(-1) / 4950) < 1e-12
    big = eta_c(1414, 1)
    assert 0.99e-6 <= big <= 1.01e-6
    verdict(f"eta_c(100,1)=1/4950, eta_c_general={general:.6e}, eta_c(1414,1)={big:.6e}")


# 2
def test_criterion_02_error_correction_exact(steane, poly11, verdict):
    start = time.perf_counter()
    worst = 0.0
    for a in range(2):
        clean = codeword(steane, a)
        for q in range(7):
            for err in _nonzero_errors(2):
                fixed = ideal_ec(steane, apply_unitary(clean, pauli_matrix(2, [err]), [q]))
                worst = max(worst, trace_distance(fixed.reduced(range(7)), pure_density(clean)))
    assert worst < 1e-9
    verdict(f"steane 2x21 cases, max trace distance {worst:.1e}")

    poly_worst = 0.0
    cases = 0
    states = [codeword(poly11, 4), logical_state(poly11, {0: 0.6, 3: 0.8j})]
    for state in states:
        for q in range(poly11.m):
            for err in _nonzero_errors(11):
                fixed = ideal_ec(poly11, apply_unitary(state, pauli_matrix(11, [err]), [q]))
                poly_worst = max(poly_worst, _support_trace_distance(fixed, state))
                cases += 1
    assert cases == 2 * 7 * 120
    assert poly_worst < 1e-9
    verdict(f"poly(11,2) {cases} cases, max trace distance {poly_worst:.1e}")
    _within(120, start)


# 3
def test_criterion_03_general_channels(steane, verdict):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        coeffs = rng.normal(size=2) + 1j * rng.normal(size=2)
        coeffs /= np.linalg.norm(coeffs)
        state = logical_state(steane, dict(enumerate(coeffs)))
        noisy = apply_channel_purified(state, random_channel(2, 1, seed), [int(rng.integers(7))])
        fixed = ideal_ec(steane, noisy, block=range(7))
        worst = max(worst, trace_distance(fixed.reduced(range(7)), pure_density(state)))
    assert worst < 1e-8
    verdict(f"50 channels, max trace distance {worst:.1e}")
    _within(300, start)


# 4
def test_criterion_04_gadget_logical_action(steane, poly5, verdict):
    start = time.perf_counter()
    gadgets = [transversal_gadget(steane, g) for g in STEANE_TRANSVERSAL]
    gadgets += [transversal_gadget(poly5, g, c) for g, c in POLY_TRANSVERSAL]
    gadgets += [fourier_gadget(poly5), degree_reduction_gadget(poly5)]
    worst, cases = 1.0, 0
    for g in gadgets:
        rep = verify_gadget(g)
        assert rep.ok, rep.to_dict()
        worst, cases = min(worst, rep.min_fidelity), cases + rep.cases
    rep = verify_gadget(toffoli_gadget_poly(poly5), superpositions=0)
    assert rep.cases == 125
    assert rep.ok, rep.to_dict()
    worst = min(worst, rep.min_fidelity)
    verdict(f"{len(gadgets)} gadgets ({cases} cases) + toffoli 125 triples, min fidelity {worst:.12f}")
    assert worst > 1 - FIDELITY_TOL
    _within(600, start)


# 5
def test_criterion_05_spread(steane, poly5, verdict):
    start = time.perf_counter()
    trans = [transversal_gadget(steane, g) for g in STEANE_TRANSVERSAL]
    trans += [transversal_gadget(poly5, g, c) for g, c in POLY_TRANSVERSAL]
    spreads = {g.implements: measure_spread(g).l for g in trans}
    assert set(spreads.values()) == {1}, spreads
    ec_l = measure_spread(ec_gadget(steane)).l
    assert ec_l <= 4
    cnot = transversal_gadget(steane, "cnot")
    plain = measure_spread(cnot).l
    routed = measure_spread(routed_gadget(cnot)[0]).l
    assert routed <= 2 * plain
    verdict(f"{len(trans)} transversal l=1, steane EC l={ec_l}, routed cnot l={routed} vs {plain}")
    _within(600, start)


# 6
def test_criterion_06_effective_rates(verdict):
    rates = effective_rate(1e-4, 100, 1, 3)
    for got, want in zip(rates, (4.950e-5, 1.2129e-5, 7.28e-7)):
        assert abs(got - want) / want < 1e-3
    fixed = eta_c_exact(100, 1)
    assert effective_rate_exact(fixed, 100, 1, 5) == [fixed] * 5
    floats = effective_rate(eta_c(100, 1), 100, 1, 5)
    assert max(abs(x / eta_c(100, 1) - 1) for x in floats) < 1e-12
    verdict("rates " + ", ".join(f"{x:.5e}" for x in rates) + "; fixed point exact")


# 7
def test_criterion_07_monte_carlo(verdict):
    tree = uniform_tree(20, 1)
    exact = 1 - exact_sparse_probability(20, 1, 0.01)
    assert abs(exact - 0.01686) < 5e-6
    mc = monte_carlo_sparseness(tree, 0.01, 1, 100_000, seed=2024)
    non_sparse = 1 - mc.estimate
    assert abs(non_sparse - exact) <= 3 * mc.stderr
    zero = monte_carlo_sparseness(tree, 0.0, 1, 100_000, seed=2024)
    assert zero.estimate == 1.0
    verdict(f"non-sparse {non_sparse:.5f} vs exact {exact:.5f} (sigma {mc.stderr:.5f}); eta=0 gives 1.0")


# 8
def test_criterion_08_bad_paths(verdict):
    b1, e1 = minimal_bad_count(4, 1, 1)
    b2, e2 = minimal_bad_count(4, 1, 2)
    assert e1 == b1 == 6 == math.comb(4, 2)
    assert e2 is not None and e2 <= b2
    for args in [(2.0, 100, 100, 1, 1e-4), (1.5, 10, 20, 2, 1e-3), (4.0, 3, 4, 1, 0.1)]:
        vals = [correlated_bad_bound(*args, r) for r in range(6)]
        assert all(b < a for a, b in zip(vals, vals[1:]) if a > 0), vals
    verdict(f"r=1 exact {e1} = bound {b1}; r=2 exact {e2} <= bound {b2}; correlated bound decreasing")


# 9
def test_criterion_09_sparse_paths_stay_sparse(steane, verdict):
    start = time.perf_counter()
    prog = parse_program("h 0; cnot 0 1; phase_i 1; not 0; cnot 1 0", 2, 2)
    rep = lemma_check(simulate_r(prog, steane, 1, ec=False))
    assert rep.paths > 0
    assert rep.violations == []
    assert rep.ok
    verdict(f"{rep.periods} periods, {rep.paths} paths, max residual {rep.max_residual}, zero violations")
    _within(900, start)


# 10
def test_criterion_10_recursive_majority(verdict):
    m, p, k = 3, 3, 1
    exhaustive = 0
    for r in (1, 2):
        tree = uniform_tree(m, r)
        for size in range(m**r + 1):
            for flips in itertools.combinations(range(m**r), size):
                if not is_sparse(flips, tree, k)[0]:
                    continue
                for a in range(p):
                    for offsets in itertools.product(range(1, p), repeat=size):
                        digits = np.full(m**r, a)
                        digits[list(flips)] = (a + np.array(offsets, dtype=int)) % p
                        assert recursive_majority(digits, m, r) == a
                        exhaustive += 1

    m, r, k, p = 7, 2, 3, 11
    tree = uniform_tree(m, r)
    rng = np.random.default_rng(10)
    for _ in range(10_000):
        bad = rng.choice(m, rng.integers(0, k + 1), replace=False)
        flips = []
        for g in range(m):
            size = int(rng.integers(0, (m if g in bad else k) + 1))
            flips += list(g * m + rng.choice(m, size, replace=False))
        assert is_sparse(flips, tree, k)[0]
        a = int(rng.integers(p))
        digits = np.full(m**r, a)
        digits[flips] = rng.integers(0, p, len(flips))
        assert recursive_majority(digits, m, r) == a
    verdict(f"m=3 exhaustive {exhaustive} cases; m=7 r=2 10000 random cases")


# 11
def test_criterion_11_universality(verdict):
    worst_gap, worst_comm = np.inf, np.inf
    for p in (5, 7, 11):
        expected = (2 + (p - 1) * 2 * math.cos(2 * math.pi / p)) / p
        for i in range(p):
            rep = univ_commutator_check(p, i, n_max=1000)
            for det in (rep.det_x, rep.det_y):
                assert abs(det - 1) < 1e-10
            for tr in (rep.trace_x, rep.trace_y):
                assert abs(tr - expected) < 1e-10
            assert rep.closest_root_gap > 1e-9
            assert rep.commutator_norm > 1e-10
            assert rep.passed
            worst_gap = min(worst_gap, rep.closest_root_gap)
            worst_comm = min(worst_comm, rep.commutator_norm)
    verdict(f"p=5,7,11 all i; min root-of-unity gap {worst_gap:.2e}, min commutator norm {worst_comm:.3f}")


# 12
def test_criterion_12_end_to_end_claim_not_simulable(verdict):
    verdict("NOT desk-reproducible: arbitrary-length computation at large r is beyond quantum simulation; "
            "covered by criteria 1, 6, 7, 8 and 9")
    pytest.skip("not desk-reproducible; covered by criteria 1, 6, 7, 8 and 9")
