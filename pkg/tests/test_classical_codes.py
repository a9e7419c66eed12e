import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.classical_codes import (
    LinearCode, correct, decode_min_weight, dual, extended_hamming, is_doubly_even_selfdual,
    make_reed_solomon, make_steane_pair, min_distance, rank, syndrome,
)
from artifact.errors import BadParams, LengthMismatch
from artifact.field import PrimeField


def _codes():
    c1, c2 = make_steane_pair()
    r1, r2 = make_reed_solomon(PrimeField(11), 2, range(1, 8))
    s1, s2 = make_reed_solomon(PrimeField(5), 1, range(1, 5))
    return {"hamming": c1, "hamming-dual": c2, "rs11": r1, "rs11-sub": r2, "rs5": s1}


CODES = _codes()


def _brute_distance(code):
    words = code.codewords()
    w = np.count_nonzero(words, axis=1)
    return int(w[w > 0].min())


def test_steane_pair_parameters():
    c1, c2 = make_steane_pair()
    assert (c1.m, c1.k, c2.k) == (7, 4, 3)
    assert c2.subcode_of(c1)
    assert dual(c1).same_span(c2)
    assert min_distance(c1) == 3 and min_distance(c2) == 4


def test_extended_hamming_doubly_even_self_dual():
    ext = extended_hamming()
    assert ext.same_span(dual(ext))
    words = ext.codewords()
    assert np.all(np.count_nonzero(words, axis=1) % 4 == 0)
    assert is_doubly_even_selfdual(ext)


@pytest.mark.parametrize("name", sorted(CODES))
def test_dual_dimension_and_involution(name):
    code = CODES[name]
    assert code.k + dual(code).k == code.m
    assert dual(dual(code)).same_span(code)
    assert not (code.generator @ dual(code).generator.T % code.p).any()


@pytest.mark.parametrize("name", sorted(CODES))
def test_min_distance_against_enumeration(name):
    code = CODES[name]
    assert min_distance(code) == _brute_distance(code)


def test_reed_solomon_is_mds():
    r1, r2 = make_reed_solomon(PrimeField(11), 2, range(1, 8))
    assert min_distance(r1) == 7 - 2
    assert r2.subcode_of(r1) and r2.k == r1.k - 1


def test_reed_solomon_rejects_bad_points():
    F = PrimeField(5)
    with pytest.raises(BadParams):
        make_reed_solomon(F, 1, [0, 1, 2])
    with pytest.raises(BadParams):
        make_reed_solomon(F, 1, [1, 1, 2])
    with pytest.raises(BadParams):
        make_reed_solomon(F, 4, [1, 2, 3, 4])


@pytest.mark.parametrize("name", ["hamming", "rs11", "rs5"])
def test_correction_within_radius_is_exact(name):
    code = CODES[name]
    p, m = code.p, code.m
    t = (_brute_distance(code) - 1) // 2
    rng = np.random.default_rng(1)
    words = code.codewords()
    for _ in range(200):
        w = words[rng.integers(len(words))]
        wt = rng.integers(0, t + 1)
        e = np.zeros(m, dtype=np.int64)
        pos = rng.choice(m, wt, replace=False)
        e[pos] = rng.integers(1, p, wt)
        fixed, err = correct(code, (w + e) % p)
        assert not syndrome(code, fixed).any()
        assert np.array_equal(fixed, w)
        assert err.weight == wt and not err.beyond_radius


def test_decoder_returns_minimum_weight_and_first_in_order():
    code = CODES["rs5"]  # d_min 4: weight-2 syndromes can be ambiguous
    p, m = code.p, code.m
    best = {}
    for wt in range(m + 1):
        for pos in itertools.combinations(range(m), wt):
            for vals in itertools.product(range(1, p), repeat=wt):
                e = np.zeros(m, dtype=np.int64)
                e[list(pos)] = vals
                best.setdefault(tuple(syndrome(code, e)), wt)
    for s, wt in best.items():
        got = decode_min_weight(code, s)
        assert got.weight == wt
        assert tuple(syndrome(code, got.to_word())) == s
    # deterministic: repeated calls agree
    s = next(iter(best))
    assert decode_min_weight(code, s).items() == decode_min_weight(code, s).items()


def test_beyond_radius_flag():
    code = CODES["hamming"]
    e = np.zeros(7, dtype=np.int64)
    e[[0, 1]] = 1
    # Hamming is perfect: every syndrome is a weight-1 pattern, so this weight-2
    # error is silently miscorrected
    got = decode_min_weight(code, syndrome(code, e))
    assert got.weight == 1
    rs = CODES["rs11"]  # radius 2, cap 3
    e = np.zeros(7, dtype=np.int64)
    e[[0, 1, 2, 3]] = [1, 2, 3, 4]
    assert decode_min_weight(rs, syndrome(rs, e)).beyond_radius


def test_syndrome_length_checked():
    with pytest.raises(LengthMismatch):
        syndrome(CODES["hamming"], [0, 1])
    with pytest.raises(LengthMismatch):
        decode_min_weight(CODES["hamming"], [1])


@pytest.mark.parametrize("name", sorted(CODES))
def test_text_round_trip(name):
    code = CODES[name]
    text = code.to_text()
    again = LinearCode.from_text(text)
    assert again.to_text() == text
    assert text.splitlines()[0] == f"{code.p} {code.m} {code.k}"


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(2, 6), st.data())
def test_random_codes_rank_and_dual(p, m, data):
    rows = data.draw(st.lists(st.lists(st.integers(0, p - 1), min_size=m, max_size=m), min_size=1, max_size=m))
    mat = np.array(rows) % p
    r = rank(mat, p)
    if r != len(rows):
        with pytest.raises(BadParams):
            LinearCode(PrimeField(p), m, rows)
        return
    code = LinearCode(PrimeField(p), m, rows)
    assert code.k + dual(code).k == m
    for w in code.codewords():
        assert code.contains(w)
