"""Threshold formulas, effective-rate iteration, bad-path counting and Monte Carlo.

Exact values use ``fractions.Fraction``; everything that can underflow is
evaluated in the log domain first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from ._parallel import fork_map
from .errors import AboveThreshold, BadParams, EmptyTable
from .fault_model import RectangleTree, is_sparse, trial_seed, uniform_tree

BISECT_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdParams:
    A: int
    k: int
    d: int | None = None
    l: int | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.k < 0 or self.A < self.k + 1:
            raise BadParams(f"need A >= k+1 >= 1, got A={self.A}, k={self.k}")


def _check(A: int, k: int):
    if k < 0 or A < k + 1:
        raise BadParams(f"need A >= k+1 >= 1, got A={A}, k={k}")


def eta_c_exact(A: int, k: int) -> Fraction:
    _check(A, k)
    return Fraction(1, math.comb(A, k + 1) ** k)


def eta_c(A: int, k: int) -> float:
    """binom(A, k+1) ** -k."""
    return float(eta_c_exact(A, k))


def eta_c_general(A: int, k: int) -> float:
    """Threshold for general (non-probabilistic) noise: exp(-k)/2 times eta_c."""
    if k < 1:
        raise BadParams("k >= 1 is required")
    _check(A, k)
    return 0.5 * math.exp(-k) * eta_c(A, k)


def eta_c_universal(eta_prime: float, table: Mapping[float, float]) -> tuple[float, float]:
    """max over delta of (eta_prime - delta) / S(delta); returns (value, argmax)."""
    if not table:
        raise EmptyTable("the delta -> gate-count table is empty")
    best = None
    for delta in sorted(table):
        if delta >= eta_prime:
            raise BadParams(f"delta {delta} is not below eta' = {eta_prime}")
        value = (eta_prime - delta) / table[delta]
        if best is None or value > best[0]:
            best = (value, delta)
    return best


def _log_binom(A: int, k: int) -> float:
    return math.log(math.comb(A, k + 1))


def delta_for(eta: float, A: int, k: int) -> float:
    """Largest delta with binom(A,k+1) eta^(k+1) < eta^(1+delta), by bisection."""
    _check(A, k)
    if not 0 < eta < eta_c(A, k):
        raise AboveThreshold(f"eta = {eta} is not in (0, eta_c)")
    log_eta = math.log(eta)
    lhs = _log_binom(A, k) + (k + 1) * log_eta

    def holds(delta):
        return lhs < (1 + delta) * log_eta

    lo, hi = 0.0, float(k)
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def delta_closed_form(eta: float, A: int, k: int) -> float:
    return (_log_binom(A, k) + (k + 1) * math.log(eta)) / math.log(eta) - 1


def sparse_prob_bound(eta: float, delta: float, r: int) -> float:
    """1 - eta^((1+delta)^r), computed without underflow."""
    if eta <= 0:
        return 1.0
    log_tail = (1 + delta) ** r * math.log(eta)
    return -math.expm1(log_tail) if log_tail > -745 else 1.0


def effective_rate(eps0: float, A: int, k: int, r: int) -> list[float]:
    """eps_{s+1} = binom(A,k+1) eps_s^(k+1), for s = 0..r-1."""
    c = math.comb(A, k + 1)
    out, eps = [], eps0
    for _ in range(r):
        eps = c * eps ** (k + 1) if eps > 0 else 0.0
        out.append(eps)
    return out


def effective_rate_exact(eps0: Fraction, A: int, k: int, r: int) -> list[Fraction]:
    c = math.comb(A, k + 1)
    out, eps = [], Fraction(eps0)
    for _ in range(r):
        eps = c * eps ** (k + 1)
        out.append(eps)
    return out


def bad_bound(A: int, k: int, r: int) -> int:
    """binom(A,k+1) ** (((k+1)^r - 1) / k); exponent 0 at r = 0."""
    _check(A, k)
    if k == 0:
        return 1
    return math.comb(A, k + 1) ** (((k + 1) ** r - 1) // k)


def _minimal_bad_sets(tree: RectangleTree, k: int) -> int:
    """Count inclusion-minimal non-sparse leaf sets by enumeration."""
    n = len(tree.leaves)
    # a minimal bad set of the uniform tree has (k+1)^r leaves; search by size
    minimal: list[frozenset] = []
    size = 1
    while size <= n:
        found = False
        for combo in itertools.combinations(range(n), size):
            if is_sparse(combo, tree, k)[0]:
                continue
            s = frozenset(combo)
            if any(m <= s for m in minimal):
                continue
            minimal.append(s)
            found = True
        if minimal and not found:
            break
        size += 1
    return len(minimal)


def minimal_bad_count(A: int, k: int, r: int, budget: int = 5_000_000) -> tuple[int, int | None]:
    """(closed-form bound, exact minimal bad-path count or None when out of budget)."""
    bound = bad_bound(A, k, r)
    n = A**r
    if r == 0:
        return bound, 1
    smallest = (k + 1) ** r
    cost = sum(math.comb(n, s) for s in range(1, smallest + 2))
    if cost > budget:
        return bound, None
    exact = _minimal_bad_sets(uniform_tree(A, r), k)
    if exact > bound:
        raise AssertionError(f"exact count {exact} exceeds the closed form {bound}")
    return bound, exact


def correlated_bad_bound(c: float, v: int, A: int, k: int, eta: float, r: int) -> float:
    """c v (binom(A,k+1)^(1/k) eta)^((k+1)^r)."""
    _check(A, k)
    if k < 1:
        raise BadParams("k >= 1 is required")
    base = math.comb(A, k + 1) ** (1 / k) * eta
    if base >= 1:
        raise AboveThreshold(f"binom(A,k+1)^(1/k) * eta = {base} >= 1")
    if base == 0:
        return 0.0
    log_val = math.log(c * v) + (k + 1) ** r * math.log(base)
    return math.exp(log_val) if log_val > -745 else 0.0


# ------------------------------------------------------------ Monte Carlo


@dataclass
class MCResult:
    estimate: float
    stderr: float
    trials: int
    seed: int
    blocks: list[tuple[int, float, float]]

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "trials": self.trials, "seed": self.seed}


Sampler = Callable[[int, float, np.random.Generator], np.ndarray]


def iid_mask(n: int, eta: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n) < eta


def burst_mask(burst_mean: float = 2.0) -> Sampler:
    from .fault_model import burst_bits

    def sample(n, eta, rng):
        return burst_bits(n, eta, burst_mean, rng).astype(bool)

    return sample


def _sparse_batch(hits: np.ndarray, tree: RectangleTree, k: int) -> np.ndarray:
    """Vectorised (r, k)-sparseness of many fault masks (rows)."""
    bad = hits
    for s in range(tree.r):
        par = tree.parents[s]
        n_rect = tree.count(s + 1)
        counts = np.zeros((bad.shape[0], n_rect), dtype=np.int64)
        rows, cols = np.nonzero(bad)
        np.add.at(counts, (rows, par[cols]), 1)
        bad = counts > k
    return ~bad.any(axis=1)


def monte_carlo_sparseness(tree: RectangleTree, eta: float, k: int, trials: int, seed: int,
                           sampler: Sampler | None = None, block: int = 10_000, jobs: int = 1) -> MCResult:
    """Fraction of sampled fault paths that are (r, k)-sparse, with binomial stderr.

    Trials are processed in blocks; block b uses the stream seeded by
    ``trial_seed(seed, b)``, so ``jobs`` workers give the serial result.
    """
    if trials < 1000:
        raise BadParams("at least 1000 trials are required")
    sampler = sampler or iid_mask
    n = len(tree.leaves)
    sizes = [min(block, trials - i) for i in range(0, trials, block)]

    def run_block(b):
        size = sizes[b]
        rng = np.random.default_rng(trial_seed(seed, b))
        hits = np.stack([sampler(n, eta, rng) for _ in range(size)]) if n else np.zeros((size, 0), bool)
        return int(_sparse_batch(hits, tree, k).sum())

    counts = fork_map(run_block, range(len(sizes)), jobs)
    blocks = []
    for b, (ok, size) in enumerate(zip(counts, sizes)):
        frac = ok / size
        blocks.append((b, frac, math.sqrt(frac * (1 - frac) / size)))
    sparse = sum(counts)
    est = sparse / trials
    return MCResult(est, math.sqrt(est * (1 - est) / trials), trials, seed, blocks)


def exact_sparse_probability(A: int, k: int, eta: float) -> float:
    """Pr[at most k faults among A iid locations] (one level)."""
    return sum(math.comb(A, j) * eta**j * (1 - eta) ** (A - j) for j in range(k + 1))


def report(A: int, k: int, eta: float, r: int, mc: MCResult | None = None) -> dict:
    out = {
        "params": {"A": A, "k": k, "eta": eta, "r": r},
        "eta_c": eta_c(A, k),
        "eta_c_general": eta_c_general(A, k) if k >= 1 else None,
        "effective_rates": effective_rate(eta, A, k, r),
    }
    if mc is not None:
        out["mc"] = mc.to_dict()
        out["mc"]["non_sparse_fraction"] = 1 - mc.estimate
        if r == 1:
            out["exact_non_sparse"] = 1 - exact_sparse_probability(A, k, eta)
    return out


def rates_csv_rows(eta: float, A: int, k: int, r: int) -> list[tuple[int, float, float]]:
    """(level, effective rate, sparse-probability bound) per level."""
    rates = [eta] + effective_rate(eta, A, k, r)
    try:
        delta = delta_for(eta, A, k)
    except AboveThreshold:
        delta = None
    rows = []
    for s in range(r + 1):
        bound = sparse_prob_bound(eta, delta, s) if delta is not None else float("nan")
        rows.append((s, rates[s], bound))
    return rows
