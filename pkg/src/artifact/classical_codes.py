"""Classical linear codes over prime fields.

Matrices are numpy integer arrays reduced mod p. Row-reduction, rank and
kernel computations are written out here because numpy's linear algebra works
over the reals only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import BadParams, LengthMismatch, TooLarge
from .field import FieldElement, PrimeField, lagrange_at_zero

BRUTE_FORCE_BUDGET = 10**7
DECODE_WEIGHT_CAP = 3


def _as_matrix(rows, m: int, p: int) -> np.ndarray:
    arr = np.array([[int(v) for v in r] for r in rows], dtype=np.int64).reshape(-1, m)
    return arr % p


def rref(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p. Returns (matrix, pivot columns)."""
    a = np.array(mat, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), p - 2, p) if p > 2 else 1
        a[r] = a[r] * inv % p
        others = np.nonzero(a[:, c])[0]
        for o in others:
            if o != r:
                a[o] = (a[o] - a[o, c] * a[r]) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank(mat: np.ndarray, p: int) -> int:
    if mat.size == 0:
        return 0
    return len(rref(mat, p)[1])


def kernel(mat: np.ndarray, m: int, p: int) -> np.ndarray:
    """Basis (as rows) of {x : mat @ x = 0 mod p}."""
    if mat.size == 0:
        return np.eye(m, dtype=np.int64)
    red, pivots = rref(mat, p)
    free = [c for c in range(m) if c not in pivots]
    basis = np.zeros((len(free), m), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = (-red[row, f]) % p
    return basis


def solve(mat: np.ndarray, rhs: np.ndarray, p: int) -> np.ndarray | None:
    """One solution x of mat @ x = rhs over F_p, or None."""
    rows, cols = mat.shape
    aug = np.concatenate([mat % p, (rhs % p).reshape(-1, 1)], axis=1)
    red, pivots = rref(aug, p)
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for row, pc in enumerate(pivots):
        x[pc] = red[row, cols]
    return x


@dataclass
class ErrorVector:
    """Sparse error pattern: coordinate -> nonzero value."""

    m: int
    p: int
    entries: dict[int, int] = dc_field(default_factory=dict)
    beyond_radius: bool = False

    @property
    def weight(self) -> int:
        return len(self.entries)

    def to_word(self) -> np.ndarray:
        w = np.zeros(self.m, dtype=np.int64)
        for i, v in self.entries.items():
            w[i] = v
        return w

    def items(self):
        return sorted(self.entries.items())


class LinearCode:
    """Linear code given by a generator matrix with independent rows."""

    def __init__(self, field: PrimeField, m: int, generator, known_min_distance: int | None = None):
        self.field = field
        self.p = field.p
        self.m = int(m)
        gen = _as_matrix(generator, self.m, self.p) if len(generator) else np.zeros((0, self.m), np.int64)
        if rank(gen, self.p) != gen.shape[0]:
            raise BadParams("generator rows are linearly dependent")
        self.generator = gen
        self.parity_check = kernel(gen, self.m, self.p)
        self.known_min_distance = known_min_distance
        self._syndrome_table: dict[tuple[int, ...], tuple[int, int]] | None = None
        self._build_table()

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    def __repr__(self):
        return f"LinearCode(p={self.p}, m={self.m}, k={self.k})"

    def contains(self, word) -> bool:
        w = np.asarray(word, dtype=np.int64) % self.p
        if w.shape != (self.m,):
            raise LengthMismatch(f"word length {w.shape} != {self.m}")
        return not np.any(self.parity_check @ w % self.p)

    def codewords(self) -> np.ndarray:
        """All p^k codewords as rows (enumeration order: messages in base p)."""
        if self.p ** self.k > BRUTE_FORCE_BUDGET:
            raise TooLarge(f"{self.p}^{self.k} codewords exceed the enumeration budget")
        if self.k == 0:
            return np.zeros((1, self.m), dtype=np.int64)
        msgs = np.array(list(itertools.product(range(self.p), repeat=self.k)), dtype=np.int64)
        return msgs @ self.generator % self.p

    def same_span(self, other: "LinearCode") -> bool:
        if self.m != other.m or self.p != other.p or self.k != other.k:
            return False
        both = np.concatenate([self.generator, other.generator])
        return rank(both, self.p) == self.k

    def subcode_of(self, other: "LinearCode") -> bool:
        return all(other.contains(row) for row in self.generator)

    @property
    def min_distance(self) -> int:
        if self.known_min_distance is None:
            self.known_min_distance = min_distance(self)
        return self.known_min_distance

    @property
    def radius(self) -> int:
        return (self.min_distance - 1) // 2

    def _build_table(self):
        # weight-1 syndromes, used on hot paths
        table: dict[tuple[int, ...], tuple[int, int]] = {}
        cols = self.parity_check.T
        for i in range(self.m):
            for v in range(1, self.p):
                key = tuple((cols[i] * v % self.p).tolist())
                table.setdefault(key, (i, v))
        self._syndrome_table = table

    def to_text(self) -> str:
        lines = [f"{self.p} {self.m} {self.k}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.generator]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinearCode":
        lines = [ln for ln in text.strip("\n").split("\n")]
        p, m, k = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in ln.split()] for ln in lines[1 : 1 + k]]
        if len(rows) != k or any(len(r) != m for r in rows):
            raise BadParams("malformed code text")
        return cls(PrimeField(p), m, rows)


def make_reed_solomon(field: PrimeField, d: int, points: Sequence[int | FieldElement]):
    """Evaluation codes of polynomials with degree <= d (C1) and those vanishing at 0 (C2)."""
    p = field.p
    xs = [int(x) % p for x in points]
    m = len(xs)
    if d < 0 or d >= m or m > p - 1:
        raise BadParams(f"need 0 <= d < m <= p-1, got d={d}, m={m}, p={p}")
    if any(x == 0 for x in xs) or len(set(xs)) != m:
        raise BadParams("evaluation points must be distinct and nonzero")
    rows = [[pow(x, j, p) for x in xs] for j in range(d + 1)]
    c1 = LinearCode(field, m, rows, known_min_distance=m - d)
    c2 = LinearCode(field, m, rows[1:], known_min_distance=(m - d + 1) if d > 0 else None)
    c1.points = tuple(xs)
    c2.points = tuple(xs)
    return c1, c2


def make_steane_pair():
    """[7,4] Hamming code and its [7,3] dual.

    The Hamming code is obtained from the [8,4] extended Hamming code
    (first-order Reed-Muller code on F_2^3) by deleting the coordinate that
    sits at the origin.
    """
    f2 = PrimeField(2)
    ext = extended_hamming()
    punct = ext.generator[:, 1:]
    c1 = LinearCode(f2, 7, punct, known_min_distance=3)
    c2 = LinearCode(f2, 7, punct[1:], known_min_distance=4)
    return c1, c2


def extended_hamming() -> LinearCode:
    pts = list(range(8))
    rows = [[1] * 8] + [[(x >> b) & 1 for x in pts] for b in range(3)]
    return LinearCode(PrimeField(2), 8, rows, known_min_distance=4)


def dual(code: LinearCode) -> LinearCode:
    return LinearCode(code.field, code.m, code.parity_check)


def weights(code: LinearCode) -> np.ndarray:
    return np.count_nonzero(code.codewords(), axis=1)


def min_distance(code: LinearCode) -> int:
    if code.p ** code.k > BRUTE_FORCE_BUDGET:
        raise TooLarge(f"{code.p}^{code.k} codewords exceed the brute-force budget")
    if code.k == 0:
        # no nonzero codeword; convention: distance exceeds the length
        return code.m + 1
    w = weights(code)
    return int(w[w > 0].min())


def is_doubly_even_selfdual(code: LinearCode) -> bool:
    return (
        code.p == 2
        and 2 * code.k == code.m
        and code.same_span(dual(code))
        and bool(np.all(weights(code) % 4 == 0))
    )


def syndrome(code: LinearCode, word) -> np.ndarray:
    w = np.asarray(word, dtype=np.int64)
    if w.shape != (code.m,):
        raise LengthMismatch(f"word length {w.shape} != {code.m}")
    return code.parity_check @ (w % code.p) % code.p


def decode_min_weight(code: LinearCode, synd, weight_cap: int = DECODE_WEIGHT_CAP) -> ErrorVector:
    """Minimum-weight error with the given syndrome.

    Searches weights 0..weight_cap; among equal weights the first pattern in
    lexicographic (position, value) order wins. If nothing that light exists
    an arbitrary solution is returned with ``beyond_radius`` set.
    """
    p, m = code.p, code.m
    s = np.asarray(synd, dtype=np.int64) % p
    if s.shape != (code.parity_check.shape[0],):
        raise LengthMismatch("syndrome has the wrong length")
    if not s.any():
        return ErrorVector(m, p)
    radius = _radius_or_cap(code, weight_cap)
    hit = code._syndrome_table.get(tuple(s.tolist()))
    if hit is not None:
        return ErrorVector(m, p, {hit[0]: hit[1]}, beyond_radius=radius < 1)
    H = code.parity_check
    for w in range(2, weight_cap + 1):
        vals = np.array(list(itertools.product(range(1, p), repeat=w)), dtype=np.int64)
        for pos in itertools.combinations(range(m), w):
            prod = vals @ H[:, pos].T % p
            ok = np.nonzero(np.all(prod == s, axis=1))[0]
            if ok.size:
                chosen = vals[ok[0]]
                return ErrorVector(
                    m, p, {i: int(v) for i, v in zip(pos, chosen)}, beyond_radius=w > radius
                )
    x = solve(H, s, p)
    entries = {i: int(v) for i, v in enumerate(x) if v}
    return ErrorVector(m, p, entries, beyond_radius=True)


def _radius_or_cap(code: LinearCode, cap: int) -> int:
    try:
        return code.radius
    except TooLarge:
        return cap


def correct(code: LinearCode, word) -> tuple[np.ndarray, ErrorVector]:
    """Subtract the decoded error from ``word``."""
    w = np.asarray(word, dtype=np.int64) % code.p
    e = decode_min_weight(code, syndrome(code, w))
    return (w - e.to_word()) % code.p, e


def interpolation_weights(points: Sequence[int], p: int) -> tuple[int, ...]:
    return lagrange_at_zero(points, p)
