"""Prime-field arithmetic, polynomial evaluation and interpolation weights."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import BadParams, DuplicatePoint, FieldMismatch, ZeroInverse, ZeroPoint

MAX_PRIME = 10_000


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, int) or self.p > MAX_PRIME or not is_prime(self.p):
            raise BadParams(f"{self.p!r} is not a prime in [2, {MAX_PRIME}]")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(v, self) for v in range(self.p)]

    def inv(self, a: int) -> int:
        """Integer-level inverse, used on hot paths."""
        return _inv_mod(a % self.p, self.p)


@lru_cache(maxsize=None)
def _inv_mod(a: int, p: int) -> int:
    if a == 0:
        raise ZeroInverse(f"0 has no inverse mod {p}")
    # extended Euclid on (a, p)
    old_r, r = a, p
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    return old_s % p


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self):
        if not 0 <= self.value < self.field.p:
            raise BadParams(f"value {self.value} outside [0, {self.field.p})")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"F_{self.field.p} vs F_{other.field.p}")
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement((self.value + o) % self.field.p, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return FieldElement((self.value - o) % self.field.p, self.field)

    def __rsub__(self, other):
        o = self._coerce(other)
        return FieldElement((o - self.value) % self.field.p, self.field)

    def __mul__(self, other):
        o = self._coerce(other)
        return FieldElement((self.value * o) % self.field.p, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement((-self.value) % self.field.p, self.field)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * _inv_mod(o, self.field.p)

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.field.p})"


class FieldPoly:
    """Polynomial over a prime field, coefficients lowest degree first.

    Trailing zeros are stripped, so the zero polynomial has no coefficients
    and ``degree == -1``.
    """

    def __init__(self, field: PrimeField, coeffs: Iterable[int | FieldElement]):
        self.field = field
        vals = []
        for c in coeffs:
            if isinstance(c, FieldElement):
                if c.field != field:
                    raise FieldMismatch("coefficient from a different field")
                vals.append(c.value)
            else:
                vals.append(int(c) % field.p)
        while vals and vals[-1] == 0:
            vals.pop()
        self._coeffs = tuple(vals)

    @property
    def coeffs(self) -> tuple[FieldElement, ...]:
        return tuple(FieldElement(v, self.field) for v in self._coeffs)

    @property
    def degree(self) -> int:
        return len(self._coeffs) - 1

    def __eq__(self, other):
        return (
            isinstance(other, FieldPoly)
            and other.field == self.field
            and other._coeffs == self._coeffs
        )

    def __hash__(self):
        return hash((self.field.p, self._coeffs))

    def __repr__(self):
        return f"FieldPoly(p={self.field.p}, {list(self._coeffs)})"

    def __call__(self, x):
        return poly_eval(self, x)


def field_inv(field: PrimeField, a: FieldElement | int) -> FieldElement:
    if isinstance(a, FieldElement) and a.field != field:
        raise FieldMismatch("element from a different field")
    return FieldElement(_inv_mod(int(a) % field.p, field.p), field)


def horner(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def poly_eval(poly: FieldPoly, x: FieldElement | int) -> FieldElement:
    if isinstance(x, FieldElement):
        if x.field != poly.field:
            raise FieldMismatch(f"poly over F_{poly.field.p}, point over F_{x.field.p}")
        xv = x.value
    else:
        xv = int(x) % poly.field.p
    return FieldElement(horner(poly._coeffs, xv, poly.field.p), poly.field)


def lagrange_coeffs(field: PrimeField, points: Sequence[FieldElement | int]) -> list[FieldElement]:
    """Weights c_j with sum_j c_j f(x_j) = f(0) whenever deg f < len(points)."""
    p = field.p
    xs = []
    for x in points:
        if isinstance(x, FieldElement) and x.field != field:
            raise FieldMismatch("point from a different field")
        xs.append(int(x) % p)
    if any(x == 0 for x in xs):
        raise ZeroPoint("interpolation points must be nonzero")
    if len(set(xs)) != len(xs):
        raise DuplicatePoint(f"repeated point in {xs}")
    return [FieldElement(v, field) for v in lagrange_at_zero(xs, p)]


@lru_cache(maxsize=None)
def _lagrange_cached(xs: tuple[int, ...], p: int) -> tuple[int, ...]:
    out = []
    for j, xj in enumerate(xs):
        num, den = 1, 1
        for k, xk in enumerate(xs):
            if k != j:
                num = num * (-xk) % p
                den = den * (xj - xk) % p
        out.append(num * _inv_mod(den, p) % p)
    return tuple(out)


def lagrange_at_zero(xs: Sequence[int], p: int) -> tuple[int, ...]:
    """Integer version of :func:`lagrange_coeffs` without validation."""
    return _lagrange_cached(tuple(xs), p)
