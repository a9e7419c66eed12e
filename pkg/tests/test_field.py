import itertools
import random

import pytest
from hypothesis import given, strategies as st

from artifact.errors import BadParams, DuplicatePoint, FieldMismatch, ZeroInverse, ZeroPoint
from artifact.field import FieldPoly, PrimeField, field_inv, horner, is_prime, lagrange_coeffs, poly_eval

PRIMES = [2, 3, 5, 7, 11, 13, 101]


def test_is_prime_matches_sieve():
    sieve = [True] * 200
    sieve[0] = sieve[1] = False
    for i in range(2, 200):
        for j in range(2 * i, 200, i):
            sieve[j] = False
    assert [n for n in range(200) if is_prime(n)] == [n for n in range(200) if sieve[n]]


@pytest.mark.parametrize("bad", [0, 1, 4, 9, 10_007 * 1, 12])
def test_rejects_non_primes_and_large(bad):
    with pytest.raises(BadParams):
        PrimeField(bad)


@pytest.mark.parametrize("p", PRIMES)
def test_inverse_is_involution(p):
    F = PrimeField(p)
    for a in F.elements()[1:]:
        inv = field_inv(F, a)
        assert int(a * inv) == 1
        assert field_inv(F, inv) == a


def test_zero_has_no_inverse():
    with pytest.raises(ZeroInverse):
        field_inv(PrimeField(7), 0)


@given(st.sampled_from(PRIMES), st.integers(), st.integers())
def test_arithmetic_matches_integers_mod_p(p, a, b):
    F = PrimeField(p)
    x, y = F(a), F(b)
    assert int(x + y) == (a + b) % p
    assert int(x - y) == (a - b) % p
    assert int(x * y) == (a * b) % p
    assert int(-x) == (-a) % p
    if b % p:
        assert int((x / y) * y) == a % p


def test_mixing_fields_is_rejected():
    with pytest.raises(FieldMismatch):
        PrimeField(5)(1) + PrimeField(7)(1)


def test_poly_trailing_zeros_and_degree():
    F = PrimeField(5)
    assert FieldPoly(F, [1, 2, 0, 5]).degree == 1
    assert FieldPoly(F, [1, 2]) == FieldPoly(F, [1, 2, 0])


@given(st.lists(st.integers(0, 10), max_size=6), st.integers(0, 10))
def test_horner_matches_direct_sum(coeffs, x):
    p = 11
    assert horner(coeffs, x, p) == sum(c * x**i for i, c in enumerate(coeffs)) % p
    assert int(poly_eval(FieldPoly(PrimeField(p), coeffs), x)) == horner(coeffs, x, p)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_lagrange_exhaustive_small_fields(p):
    F = PrimeField(p)
    for n in range(1, p):
        for pts in itertools.combinations(range(1, p), n):
            c = lagrange_coeffs(F, pts)
            for coeffs in itertools.product(range(p), repeat=n):
                f = FieldPoly(F, coeffs)
                assert int(sum((cj * poly_eval(f, x) for cj, x in zip(c, pts)), F(0))) == coeffs[0]


def test_lagrange_randomized_p11_and_p101():
    rng = random.Random(0)
    for p in (11, 101):
        F = PrimeField(p)
        for _ in range(1000):
            n = rng.randint(1, min(p - 1, 8))
            pts = rng.sample(range(1, p), n)
            coeffs = [rng.randrange(p) for _ in range(n)]
            c = lagrange_coeffs(F, pts)
            got = sum(int(cj) * horner(coeffs, x, p) for cj, x in zip(c, pts)) % p
            assert got == coeffs[0]


def test_lagrange_rejects_bad_points():
    F = PrimeField(7)
    with pytest.raises(ZeroPoint):
        lagrange_coeffs(F, [0, 1])
    with pytest.raises(DuplicatePoint):
        lagrange_coeffs(F, [2, 2])
    with pytest.raises(FieldMismatch):
        lagrange_coeffs(F, [PrimeField(5)(1)])
