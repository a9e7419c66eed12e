"""Gadget builders: transversal gates, cat states, error correction,
encoding/decoding, degree reduction, the polynomial Fourier and Toffoli
gadgets, and the pieces of the CSS Toffoli ancilla."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..classical_codes import rref
from ..errors import BadDegree, NotTransversal, Unsupported
from ..quantum_codes import (
    QuantumCode,
    codeword_rows,
    interpolation_weights,
    wide_variant,
)
from .circuit import Circuit, CircuitBuilder


@dataclass
class Gadget:
    circuit: Circuit
    code: QuantumCode
    implements: str
    in_blocks: list[tuple[int, ...]]
    out_blocks: list[tuple[int, ...]]
    out_codes: list[QuantumCode] = field(default_factory=list)
    extra_outputs: tuple[int, ...] = ()
    declared_spread: int = 1
    in_codes: list[QuantumCode] = field(default_factory=list)

    def __post_init__(self):
        if not self.out_codes:
            self.out_codes = [self.code] * len(self.out_blocks)
        if not self.in_codes:
            self.in_codes = [self.code] * len(self.in_blocks)

    @property
    def p(self) -> int:
        return self.code.p


# --------------------------------------------------------------- helpers


class _Ops:
    """Gate vocabulary shared by the qubit and qupit builders."""

    def __init__(self, b: CircuitBuilder):
        self.b = b
        self.p = b.p
        q = self.p == 2
        self.NOT = "not" if q else "gnot"
        self.CNOT = "cnot" if q else "gcnot"
        self.TOF = "toffoli" if q else "gtoffoli"

    def inc(self, w: int, c: int = 1):
        c %= self.p
        if c:
            self.b.gate(self.NOT, [w], () if self.p == 2 else (c,))

    def fourier(self, w: int, r: int = 1):
        if self.p == 2:
            self.b.gate("h", [w])
        else:
            self.b.gate("fourier", [w], (r % self.p,))

    def fourier_inv(self, w: int):
        self.fourier(w, -1)

    def scale(self, w: int, c: int):
        c %= self.p
        if c != 1:
            self.b.gate("mult", [w], (c,))

    def add(self, src: int, dst: int, coef: int = 1):
        """dst += coef * src."""
        coef %= self.p
        if coef == 0:
            return
        if coef == 1:
            self.b.gate(self.CNOT, [src, dst])
        elif coef == self.p - 1:
            self.scale(dst, -1)
            self.b.gate(self.CNOT, [src, dst])
            self.scale(dst, -1)
        else:
            self.scale(src, coef)
            self.b.gate(self.CNOT, [src, dst])
            self.scale(src, pow(coef, -1, self.p))

    def gated_add(self, ctrl: int, src: int, dst: int, coef: int = 1):
        """dst += ctrl * coef * src (ctrl holds 0 or 1)."""
        coef %= self.p
        if coef == 0:
            return
        if coef == 1:
            self.b.gate(self.TOF, [ctrl, src, dst])
        elif coef == self.p - 1:
            self.scale(dst, -1)
            self.b.gate(self.TOF, [ctrl, src, dst])
            self.scale(dst, -1)
        else:
            self.scale(src, coef)
            self.b.gate(self.TOF, [ctrl, src, dst])
            self.scale(src, pow(coef, -1, self.p))

    def product(self, x: int, y: int) -> int:
        r = self.b.fresh1()
        self.b.gate(self.TOF, [x, y, r])
        return r

    def power(self, x: int, e: int, junk: list[int]) -> int:
        """Fresh wire holding x**e (e >= 1); intermediate wires go to ``junk``."""
        made: list[int] = []
        result = None
        base = x
        while True:
            if e & 1:
                if result is None:
                    result = self.b.fresh1()
                    self.add(base, result)
                else:
                    result = self.product(result, base)
                made.append(result)
            e >>= 1
            if not e:
                break
            copy = self.b.fresh1()
            self.add(base, copy)
            base = self.product(base, copy)
            made += [copy, base]
        junk.extend(w for w in made if w != result)
        return result

    def is_zero(self, x: int, junk: list[int]) -> int:
        """Fresh wire holding 1 if x == 0 else 0."""
        if self.p == 2:
            z = self.b.fresh1()
            self.add(x, z)
            self.inc(z)
            return z
        y = self.power(x, self.p - 1, junk)
        self.scale(y, -1)
        self.inc(y, 1)
        return y

    def equal(self, x: int, y: int, junk: list[int]) -> int:
        d = self.b.fresh1()
        self.add(y, d)
        self.add(x, d, -1)
        junk.append(d)
        return self.is_zero(d, junk)

    def and_all(self, bits: Sequence[int], junk: list[int]) -> int:
        if not bits:
            one = self.b.fresh1()
            self.inc(one)
            return one
        acc = bits[0]
        for bit in bits[1:]:
            junk.append(acc)
            acc = self.product(acc, bit)
        junk.extend(bits[1:])
        return acc

    def controlled_swap(self, ctrl: int, x: int, y: int):
        """For ctrl = 1: (x, y) -> (-y, x); identity for ctrl = 0 (p = 2: a plain swap)."""
        self.b.gate(self.TOF, [ctrl, x, y])
        if self.p == 2:
            self.b.gate(self.TOF, [ctrl, y, x])
        else:
            self.scale(x, -1)
            self.b.gate(self.TOF, [ctrl, y, x])
            self.scale(x, -1)
        self.b.gate(self.TOF, [ctrl, x, y])


def _finish(b: CircuitBuilder, code: QuantumCode, implements: str, in_blocks, out_blocks,
            out_codes=None, extra=(), spread=1, in_codes=None) -> Gadget:
    outputs = [w for blk in out_blocks for w in blk] + list(extra)
    names = {f"in{i}": blk for i, blk in enumerate(in_blocks)}
    names.update({f"out{i}": blk for i, blk in enumerate(out_blocks)})
    if extra:
        names["extra"] = tuple(extra)
    circ = b.build(outputs, names)
    return Gadget(circ, code, implements, [tuple(x) for x in in_blocks], [tuple(x) for x in out_blocks],
                  list(out_codes or []), tuple(extra), spread, list(in_codes or []))


# ------------------------------------------------------------ transversal

CSS_GATES = {"not": 1, "cnot": 2, "phase": 1, "cphase": 2, "h": 1, "swap": 2, "discard": 1}
POLY_GATES = {"gnot": 1, "gcnot": 2, "swap": 2, "mult": 1, "gphase": 1, "fourier": 1, "discard": 1}


def _css_transversal_ok(code: QuantumCode, gate: str) -> bool:
    p = code.p
    reps = {a: codeword_rows(code, a) for a in range(code.logical_dim)}
    if code.logical_dim != 2:
        return gate in ("cnot", "swap", "discard")
    if gate == "not":
        return code.logical_of(np.ones(code.m, dtype=np.int64)) == 1 and code.C1.contains(np.ones(code.m, dtype=np.int64))
    if gate == "h":
        return code.C1.same_span(code.C2perp)
    if gate == "phase":
        for a, rows in reps.items():
            if np.any((3 * rows.sum(axis=1)) % 4 != a):
                return False
        return True
    if gate == "cphase":
        for a in (0, 1):
            for b_ in (0, 1):
                dots = reps[a] @ reps[b_].T % p
                if np.any(dots != a * b_):
                    return False
        return True
    return True


def transversal_gadget(code: QuantumCode, gate: str, param: int = 1) -> Gadget:
    """Pit-wise realisation of ``gate`` on one or two blocks."""
    p, m = code.p, code.m
    table = CSS_GATES if code.kind != "polynomial" else POLY_GATES
    if gate not in table:
        raise NotTransversal(f"{gate} has no pit-wise form for {code.name()}")
    if code.kind != "polynomial" and (p != 2 or not _css_transversal_ok(code, gate)):
        raise NotTransversal(f"{gate} is not transversal for {code.name()}")
    b = CircuitBuilder(p, f"transversal-{gate}")
    ops = _Ops(b)
    blocks = [b.input_block(f"in{i}", m) for i in range(table[gate])]
    out_codes = None
    if gate == "discard":
        b.discard(blocks[0])
        return _finish(b, code, gate, blocks, [])
    cl = interpolation_weights(code) if code.kind == "polynomial" else None
    for i in range(m):
        qs = [blk[i] for blk in blocks]
        if gate == "not":
            b.gate("not", qs)
        elif gate in ("cnot", "gcnot", "swap", "cphase"):
            b.gate(gate, qs)
        elif gate == "h":
            b.gate("h", qs)
        elif gate == "phase":
            for _ in range(3):
                b.gate("phase_i", qs)
        elif gate == "gnot":
            ops.inc(qs[0], param)
        elif gate == "mult":
            if param % p == 0:
                raise NotTransversal("multiplication by zero is not unitary")
            b.gate("mult", qs, (param % p,))
        elif gate == "gphase":
            c = param * cl[i] % p
            if c:
                b.gate("gphase", qs, (c,))
        elif gate == "fourier":
            b.gate("fourier", qs, (cl[i] * param % p,))
    if gate == "fourier":
        out_codes = [wide_variant(code)]
    label = gate if gate not in ("gnot", "mult", "gphase", "fourier") else f"{gate}({param % p})"
    return _finish(b, code, label, blocks, blocks, out_codes)


# --------------------------------------------------------------- cat states


def _cat_pairs(l: int) -> list[tuple[int, int]]:
    even = [(i, i + 1) for i in range(0, l - 1, 2)]
    odd = [(i, i + 1) for i in range(1, l - 1, 2)]
    return even + odd


def _prepare_cat(ops: _Ops, l: int, m: int) -> tuple[list[int], list[int], list[int]]:
    """Cat on l fresh qupits plus m verification bits; returns (cat, checks, junk)."""
    b = ops.b
    cat = b.fresh(l)
    ops.fourier(cat[0])
    for i in range(1, l):
        ops.add(cat[i - 1], cat[i])
    checks, junk = [], []
    for _ in range(m):
        comps = [ops.equal(cat[i], cat[j], junk) for i, j in _cat_pairs(l)]
        checks.append(ops.and_all(comps, junk))
    return cat, checks, junk


def cat_prep_verify(l: int, m: int, p: int = 2) -> Circuit:
    """Cat state on ``l`` qupits and ``m`` independent all-equal check bits.

    Outputs: block ``cat`` then block ``checks``; comparator scratch is discarded.
    """
    if l < 2 or m < 2:
        from ..errors import BadParams

        raise BadParams("cat preparation needs l, m >= 2")
    b = CircuitBuilder(p, f"cat-{l}-{m}")
    ops = _Ops(b)
    cat, checks, junk = _prepare_cat(ops, l, m)
    b.discard(junk)
    return b.build(cat + checks, {"cat": cat, "checks": checks})


# -------------------------------------------------------- error correction


def _extract_row(ops: _Ops, data: Sequence[int], row: np.ndarray) -> int:
    """Syndrome digit sum_j row_j * data_j through a verified, rotated cat."""
    b = ops.b
    support = [j for j in range(len(row)) if row[j] % ops.p]
    b.barrier()
    cat, checks, junk = _prepare_cat(ops, len(support), len(support))
    b.discard(junk)
    for w in cat:
        ops.fourier(w)
    for idx, j in enumerate(support):
        ops.gated_add(checks[idx], data[j], cat[idx], int(row[j]))
    s = b.fresh1()
    for w in cat:
        ops.add(w, s)
    b.discard(cat + checks)
    return s


def _match_flag(ops: _Ops, synd: Sequence[int], col: np.ndarray, junk: list[int]) -> tuple[int, int, int]:
    """Flag that the syndrome is a multiple v*col; returns (flag, k0, 1/col[k0])."""
    p = ops.p
    k0 = int(np.flatnonzero(col % p)[0])
    h0 = int(col[k0])
    zs = []
    for k in range(len(col)):
        if k == k0:
            continue
        d = ops.b.fresh1()
        ops.add(synd[k], d, h0)
        ops.add(synd[k0], d, -int(col[k]))
        junk.append(d)
        zs.append(ops.is_zero(d, junk))
    return ops.and_all(zs, junk), k0, pow(h0, -1, p)


def _is_perfect_single(H: np.ndarray, p: int) -> bool:
    return p ** H.shape[0] == 1 + H.shape[1] * (p - 1)


def _correct_bits(ops: _Ops, data: Sequence[int], H: np.ndarray, zero_block=None):
    """One fault-tolerant bit-flip correction pass w.r.t. parity-check rows H."""
    b = ops.b
    p = ops.p
    m = len(data)
    H = np.asarray(H) % p
    copies = []
    for _ in range(m):
        copies.append([_extract_row(ops, data, row) for row in H])
    b.barrier()
    perfect = _is_perfect_single(H, p)
    for i in range(m):
        synd = copies[i]
        junk: list[int] = []
        flag, k0, hinv = _match_flag(ops, synd, H[:, i], junk)
        ops.gated_add(flag, synd[k0], data[i], -hinv)
        if not perfect:
            # project-into-code: undecodable syndromes swap in a fresh |S_0> coordinate
            oks = []
            for j in range(m):
                if j == i:
                    oks.append(flag)
                    continue
                f, _, _ = _match_flag(ops, synd, H[:, j], junk)
                oks.append(f)
            nots = []
            for f in oks:
                ops.scale(f, -1)
                ops.inc(f, 1)
                nots.append(f)
            bad = ops.and_all(nots, junk)
            ops.controlled_swap(bad, data[i], zero_block[i])
            junk.append(bad)
        else:
            junk.append(flag)
        b.discard(junk + list(synd))
        b.barrier()


def _prepare_zero(ops: _Ops, code: QuantumCode) -> list[int]:
    """|S_0> on a fresh block: Fourier, linear projection onto C2-perp, inverse Fourier."""
    b = ops.b
    p, m = code.p, code.m
    blk = b.fresh(m)
    for w in blk:
        ops.fourier(w)
    Hp = code.C2perp.parity_check % p
    if Hp.shape[0]:
        cols = _independent_columns(Hp, p)
        inv = _inverse_mod(Hp[:, cols], p)
        synd = b.fresh(Hp.shape[0])
        for k in range(Hp.shape[0]):
            for j in range(m):
                ops.add(blk[j], synd[k], int(Hp[k, j]))
        for i, j in enumerate(cols):
            for k in range(Hp.shape[0]):
                ops.add(synd[k], blk[j], -int(inv[i, k]))
        b.discard(synd)
    for w in blk:
        ops.fourier_inv(w)
    return blk


def _prepare_zero_systematic(ops: _Ops, code: QuantumCode) -> list[int]:
    """|S_0> through a systematic encoder of C2 (Fourier on the pivot coordinates)."""
    b = ops.b
    p = code.p
    blk = b.fresh(code.m)
    G, piv = rref(code.C2.generator.copy(), p)
    for i, j in enumerate(piv):
        ops.fourier(blk[j])
        for col in range(code.m):
            if col not in piv:
                ops.add(blk[j], blk[col], int(G[i, col]))
    b.materialize(blk)
    return blk


def _independent_columns(mat: np.ndarray, p: int) -> list[int]:
    _, piv = rref(mat.copy(), p)
    return list(piv)


def _inverse_mod(mat: np.ndarray, p: int) -> np.ndarray:
    n = mat.shape[0]
    aug = np.concatenate([mat % p, np.eye(n, dtype=np.int64)], axis=1)
    r, piv = rref(aug, p)
    return r[:, n:] % p


def ec_gadget(code: QuantumCode) -> Gadget:
    """Measurement-free error correction: bit pass w.r.t. C1, then a phase pass
    as a bit pass w.r.t. C2-perp between transversal Fourier layers."""
    if code.t < 1:
        raise Unsupported(f"{code.name()} corrects no errors (t = 0)")
    b = CircuitBuilder(code.p, f"ec-{code.name()}")
    ops = _Ops(b)
    data = b.input_block("in0", code.m)
    H1 = code.C1.parity_check
    Hp = code.C2perp.parity_check
    zero = None if _is_perfect_single(H1 % code.p, code.p) else _prepare_zero(ops, code)
    _correct_bits(ops, data, H1, zero)
    if zero is not None:
        b.discard(zero)
    b.barrier()
    for w in data:
        ops.fourier(w)
    zero = None
    if not _is_perfect_single(Hp % code.p, code.p):
        # Fourier image of |S_0>: uniform over C2-perp
        zero = _prepare_zero(ops, code)
        for w in zero:
            ops.fourier(w)
    _correct_bits(ops, data, Hp, zero)
    if zero is not None:
        b.discard(zero)
    b.barrier()
    for w in data:
        ops.fourier_inv(w)
    return _finish(b, code, "ec", [data], [data], spread=4)


# ---------------------------------------------------------- encode / decode


def encode_gadget(code: QuantumCode) -> Gadget:
    """a^m (basis string) -> |S_a>; the input string is consumed."""
    b = CircuitBuilder(code.p, f"encode-{code.name()}")
    ops = _Ops(b)
    src = b.input_block("in0", code.m)
    blk = _prepare_zero(ops, code)
    b.barrier()
    rep = code.coset_rep(1) if code.logical_dim > 1 else np.zeros(code.m, dtype=np.int64)
    for i in range(code.m):
        ops.add(src[i], blk[i], int(rep[i]))
    b.discard(src)
    return _finish(b, code, "encode", [src], [blk], spread=code.m)


def decode_gadget(code: QuantumCode) -> Gadget:
    """|S_a> -> |A_a>|a...a>: m independent copies, each reduced to its logical digit."""
    b = CircuitBuilder(code.p, f"decode-{code.name()}")
    ops = _Ops(b)
    data = b.input_block("in0", code.m)
    L = code._logical_map[0] % code.p
    bits = []
    for _ in range(code.m):
        copy = b.fresh(code.m)
        for j in range(code.m):
            ops.add(data[j], copy[j])
        out = b.fresh1()
        for j in range(code.m):
            ops.add(copy[j], out, int(L[j]))
        b.discard(copy)
        bits.append(out)
    return _finish(b, code, "decode", [data], [data], extra=bits, spread=1)


# --------------------------------------------------------- polynomial codes


def _require_poly(code: QuantumCode):
    if code.kind != "polynomial" or code.m != 3 * code.degree + 1:
        raise BadDegree("needs a polynomial code with m = 3d+1")


def _reduce_into(ops: _Ops, code: QuantumCode, wide: Sequence[int], target: Sequence[int]):
    """target += S_a for the degree-2d block ``wide`` holding S'_a (wide unchanged)."""
    b = ops.b
    m = code.m
    cl = interpolation_weights(code)
    opened = []
    for j in range(m):
        b.barrier()
        blk = _prepare_zero_systematic(ops, code)
        for i in range(m):
            ops.add(wide[j], blk[i])
        if code.t >= 1:
            sub = ec_gadget(code)
            b.append_circuit(sub.circuit, blk)
        opened.append(blk)
    b.barrier()
    for i in range(m):
        for j in range(m):
            ops.add(opened[j][i], target[i], cl[j])
    b.barrier()
    for j in range(m):
        for i in range(m):
            ops.add(wide[j], opened[j][i], -1)
        b.discard(opened[j])


def degree_reduction_gadget(code: QuantumCode, target_input: bool = False) -> Gadget:
    """|S'_a> (degree 2d) -> |S'_a>|S_a>; with ``target_input`` the second block
    is an input and receives +a instead of being prepared fresh."""
    _require_poly(code)
    b = CircuitBuilder(code.p, f"degree-reduction-{code.name()}")
    ops = _Ops(b)
    wide = b.input_block("in0", code.m)
    if target_input:
        target = b.input_block("in1", code.m)
    else:
        target = _prepare_zero_systematic(ops, code)
    _reduce_into(ops, code, wide, target)
    ins = [wide, target] if target_input else [wide]
    in_codes = [wide_variant(code), code] if target_input else [wide_variant(code)]
    return _finish(b, code, "degree-reduction", ins, [wide, target], [wide_variant(code), code],
                   in_codes=in_codes)


def fourier_gadget(code: QuantumCode) -> Gadget:
    """|S_a> -> p^{-1/2} sum_b w^{ab} |S_b> on a fresh output block."""
    _require_poly(code)
    p, m = code.p, code.m
    b = CircuitBuilder(p, f"fourier-{code.name()}")
    ops = _Ops(b)
    data = b.input_block("in0", m)
    cl = interpolation_weights(code)
    for i in range(m):
        b.gate("fourier", [data[i]], (cl[i],))
    target = _prepare_zero_systematic(ops, code)
    _reduce_into(ops, code, data, target)
    for i in range(m):
        ops.add(target[i], data[i], -1)
    b.discard(data)
    return _finish(b, code, "fourier", [data], [target])


def toffoli_gadget_poly(code: QuantumCode) -> Gadget:
    """|S_a>|S_b>|S_c> -> |S_a>|S_b>|S_{ab+c}>."""
    _require_poly(code)
    p, m = code.p, code.m
    b = CircuitBuilder(p, f"toffoli-{code.name()}")
    ops = _Ops(b)
    A = b.input_block("in0", m)
    B = b.input_block("in1", m)
    C = b.input_block("in2", m)
    anc = _prepare_zero_systematic(ops, wide_variant(code))
    for i in range(m):
        b.gate("gtoffoli", [A[i], B[i], anc[i]])
    _reduce_into(ops, code, anc, C)
    for i in range(m):
        ops.scale(anc[i], -1)
        b.gate("gtoffoli", [A[i], B[i], anc[i]])
        ops.scale(anc[i], -1)
    b.discard(anc)
    return _finish(b, code, "toffoli", [A, B, C], [A, B, C])


# ------------------------------------------------- CSS Toffoli ancilla parts


def phase_mix_circuit(m: int, functional: Sequence[int]) -> Circuit:
    """Per coordinate i: (-1)^{a(b_i c_i + d_i)} with a the parity
    ``functional . x`` of the i-th cat block.

    Inputs: m cat blocks of m qubits, then blocks b, c, d of m qubits.
    """
    b = CircuitBuilder(2, f"phase-mix-{m}")
    cats = [b.input_block(f"cat{i}", m) for i in range(m)]
    B = b.input_block("b", m)
    C = b.input_block("c", m)
    D = b.input_block("d", m)
    for i in range(m):
        a = b.fresh1()
        for j in range(m):
            if functional[j] % 2:
                b.gate("cnot", [cats[i][j], a])
        # (-1)^{a b c} as H . Toffoli . H on c, then (-1)^{a d}
        b.gate("h", [C[i]])
        b.gate("toffoli", [a, B[i], C[i]])
        b.gate("h", [C[i]])
        b.gate("cphase", [a, D[i]])
        for j in range(m):
            if functional[j] % 2:
                b.gate("cnot", [cats[i][j], a])
        b.discard([a])
    outs = [w for blk in cats for w in blk] + B + C + D
    return b.build(outs)


def majority_circuit() -> Circuit:
    """|a,b,c,d> -> |a,b,c,d + maj(a,b,c)>."""
    b = CircuitBuilder(2, "majority")
    a, bb, c, d = b.input_block("in", 4)
    b.gate("toffoli", [a, bb, d])
    b.gate("toffoli", [bb, c, d])
    b.gate("toffoli", [a, c, d])
    return b.build([a, bb, c, d])


def encoded_cat_circuit(code: QuantumCode, with_ec: bool = False) -> Circuit:
    """(|S_0>^m + |S_1>^m)/sqrt2 over m fresh blocks."""
    b = CircuitBuilder(code.p, "encoded-cat")
    ops = _Ops(b)
    blocks = [_prepare_zero(ops, code) for _ in range(code.m)]
    for w in blocks[0]:
        ops.fourier(w)
    for blk in blocks[1:]:
        for i in range(code.m):
            ops.add(blocks[0][i], blk[i])
    if with_ec:
        sub = ec_gadget(code)
        for blk in blocks:
            b.append_circuit(sub.circuit, blk)
    outs = [w for blk in blocks for w in blk]
    return b.build(outs)


def toffoli_ancilla_css(code: QuantumCode, cats: int = 3, with_ec: bool = False) -> Circuit:
    """Circuit producing |A> = sum over (a,b) of |S_a S_b S_ab>/2 on three blocks.

    ``cats`` = 2k+1 encoded cat states vote on the parity.
    """
    if code.kind == "polynomial" or code.p != 2 or code.m != 7 or code.logical_dim != 2:
        raise Unsupported("the |A> construction is implemented for the Steane code")
    if cats < 3 or cats % 2 == 0:
        from ..errors import BadParams

        raise BadParams("number of encoded cats must be odd and at least 3")
    m = code.m
    b = CircuitBuilder(2, "toffoli-ancilla")
    ops = _Ops(b)
    target = []
    for _ in range(3):
        blk = _prepare_zero(ops, code)
        for w in blk:
            b.gate("h", [w])
        target.append(blk)
    L = [int(v) for v in code._logical_map[0] % 2]
    mix = phase_mix_circuit(m, L)
    parities = []
    for _ in range(cats):
        b.barrier()
        sub = encoded_cat_circuit(code, with_ec)
        wmap = b.append_circuit(sub, [])
        cat_wires = [wmap[w] for w in sub.outputs]
        cat_blocks = [cat_wires[i * m:(i + 1) * m] for i in range(m)]
        b.append_circuit(mix, cat_wires + target[0] + target[1] + target[2])
        for blk in cat_blocks:
            for w in blk:
                b.gate("h", [w])
        # per copy i: parity over blocks of each block's decoded bit (own copy)
        par = []
        for i in range(m):
            bit = b.fresh1()
            for blk in cat_blocks:
                for j in range(m):
                    if L[j]:
                        ops.add(blk[j], bit)
            par.append(bit)
        b.discard(cat_wires)
        parities.append(par)
    b.barrier()
    for i in range(m):
        maj = b.fresh1()
        votes = [parities[c][i] for c in range(cats)]
        if cats == 3:
            b.append_circuit(majority_circuit(), votes + [maj])
        else:
            raise Unsupported("majority over more than three cats is not wired")
        b.gate("cnot", [maj, target[2][i]])
        b.discard([maj])
    b.discard([w for par in parities for w in par])
    outs = target[0] + target[1] + target[2]
    return b.build(outs, {"out0": target[0], "out1": target[1], "out2": target[2]})
