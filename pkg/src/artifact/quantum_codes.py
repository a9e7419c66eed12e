"""CSS and polynomial quantum codes, exact recovery and decoding oracles.

The oracle channels here act directly on simulator states (syndrome
projection plus conditional correction). They are the reference that the
gate-level gadgets are checked against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .classical_codes import (
    LinearCode,
    decode_min_weight,
    dual,
    make_reed_solomon,
    make_steane_pair,
    solve,
)
from .errors import BadLogical, BadParams, NotNested, OutsideCode, TooLarge
from .field import PrimeField, lagrange_at_zero
from .state_sim import (
    MixedState,
    SparseState,
    combine,
    fourier,
    omega,
    pattern_index,
    radix,
    row_keys,
)


@dataclass
class QuantumCode:
    kind: str  # "css-F2", "css-Fp" or "polynomial"
    field: PrimeField
    m: int
    C1: LinearCode
    C2: LinearCode
    t: int
    degree: int | None = None
    points: tuple[int, ...] | None = None
    C2perp: LinearCode = dc_field(init=False, repr=False)

    def __post_init__(self):
        self.C2perp = dual(self.C2)
        self._logical_reps = _coset_reps(self.C1, self.C2)
        self._logical_map = _logical_functional(self.C2, self._logical_reps)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def logical_k(self) -> int:
        return self.C1.k - self.C2.k

    @property
    def logical_dim(self) -> int:
        return self.p**self.logical_k

    def name(self) -> str:
        if self.kind == "polynomial":
            return f"poly(p={self.p},d={self.degree})"
        return f"{self.kind}[m={self.m}]"

    def logical_digits(self, a: int) -> np.ndarray:
        if not 0 <= int(a) < self.logical_dim:
            raise BadLogical(f"logical value {a} outside [0, {self.logical_dim})")
        digs = [(int(a) // self.p**j) % self.p for j in range(self.logical_k)]
        return np.array(digs, dtype=np.int64)

    def coset_rep(self, a: int) -> np.ndarray:
        return self.logical_digits(a) @ self._logical_reps % self.p

    def logical_of(self, word) -> int:
        """Logical value of a word of C1."""
        w = np.asarray(word, dtype=np.int64) % self.p
        digs = self._logical_map @ w % self.p
        return int(sum(int(v) * self.p**j for j, v in enumerate(digs)))

    def logical_of_rows(self, rows: np.ndarray) -> np.ndarray:
        digs = rows @ self._logical_map.T % self.p
        return digs @ (self.p ** np.arange(self.logical_k, dtype=np.int64))

    def descriptor(self) -> str:
        d = self.degree if self.degree is not None else 0
        head = f"{self.kind} {self.p} {self.m} {d} {self.t}\n"
        return head + self.C1.to_text() + self.C2.to_text()


def _coset_reps(c1: LinearCode, c2: LinearCode) -> np.ndarray:
    """Rows of C1's generator that extend a basis of C2 to one of C1."""
    from .classical_codes import rank

    basis = c2.generator.copy()
    reps = []
    for row in c1.generator:
        trial = np.concatenate([basis, row[None, :]])
        if rank(trial, c1.p) > basis.shape[0]:
            basis = trial
            reps.append(row)
    return np.array(reps, dtype=np.int64).reshape(-1, c1.m)


def _logical_functional(c2: LinearCode, reps: np.ndarray) -> np.ndarray:
    """Matrix L with L @ C2 = 0 and L @ reps^T = I."""
    p = c2.p
    hperp = c2.parity_check  # rows span C2-perp
    if reps.shape[0] == 0:
        return np.zeros((0, c2.m), dtype=np.int64)
    a = hperp @ reps.T % p  # (rows, k')
    # find X with X @ a = I
    rows = []
    for j in range(reps.shape[0]):
        e = np.zeros(reps.shape[0], dtype=np.int64)
        e[j] = 1
        x = solve(a.T, e, p)
        rows.append(x @ hperp % p)
    return np.array(rows, dtype=np.int64)


def _radius(code: LinearCode) -> int:
    try:
        return code.radius
    except TooLarge:
        return 0


def make_css_code(c1: LinearCode, c2: LinearCode) -> QuantumCode:
    if c1.p != c2.p or c1.m != c2.m or not c2.subcode_of(c1):
        raise NotNested("C2 must be a subcode of C1 over the same field and length")
    t = min(_radius(c1), _radius(dual(c2)))
    kind = "css-F2" if c1.p == 2 else "css-Fp"
    return QuantumCode(kind, c1.field, c1.m, c1, c2, t, points=getattr(c1, "points", None))


def steane_code() -> QuantumCode:
    return make_css_code(*make_steane_pair())


def make_poly_code(p: int, d: int) -> QuantumCode:
    m = 3 * d + 1
    if d < 1:
        raise BadParams("degree must be at least 1")
    if m >= p:
        raise BadParams(f"need m = 3d+1 = {m} < p = {p}")
    return poly_code_with_degree(PrimeField(p), d, m)


def poly_code_with_degree(field: PrimeField, degree: int, m: int) -> QuantumCode:
    """Polynomial code of any degree on points 1..m (no m = 3d+1 requirement)."""
    c1, c2 = make_reed_solomon(field, degree, range(1, m + 1))
    t = min((m - degree - 1) // 2, degree // 2)
    return QuantumCode("polynomial", field, m, c1, c2, t, degree=degree, points=tuple(range(1, m + 1)))


def wide_variant(code: QuantumCode) -> QuantumCode:
    """The same polynomial code with degree m-d-1 (the S' words)."""
    if code.kind != "polynomial":
        raise BadParams("only polynomial codes have a wide variant")
    return poly_code_with_degree(code.field, code.m - code.degree - 1, code.m)


def interpolation_weights(code: QuantumCode) -> tuple[int, ...]:
    return lagrange_at_zero(code.points or tuple(range(1, code.m + 1)), code.p)


# ---------------------------------------------------------------- states


def c2_words(code: QuantumCode) -> np.ndarray:
    if not hasattr(code, "_c2_words"):
        code._c2_words = code.C2.codewords()
    return code._c2_words


def codeword_rows(code: QuantumCode, a: int) -> np.ndarray:
    return (c2_words(code) + code.coset_rep(a)) % code.p


def codeword(code: QuantumCode, a: int) -> SparseState:
    rows = codeword_rows(code, a)
    amps = np.full(rows.shape[0], 1 / np.sqrt(rows.shape[0]), dtype=complex)
    return SparseState.from_arrays(code.p, code.m, rows, amps)


def logical_state(code: QuantumCode, coeffs: dict[int, complex]) -> SparseState:
    """sum_a coeffs[a] |S_a>, normalised."""
    parts_d, parts_a = [], []
    for a, c in coeffs.items():
        s = codeword(code, a)
        parts_d.append(s.digits)
        parts_a.append(s.amps * c)
    st = SparseState.from_arrays(code.p, code.m, np.concatenate(parts_d), np.concatenate(parts_a))
    return st.normalized()


def encoded_with_reference(code: QuantumCode, blocks: int = 1) -> SparseState:
    """Maximally entangled state between `blocks` code blocks and reference qupits.

    Layout: block 0, block 1, ..., then one reference qupit per logical qupit
    of each block.
    """
    L = code.logical_dim
    p = code.p
    digits, amps = [], []
    k = code.logical_k
    for labels in itertools.product(range(L), repeat=blocks):
        rows = [codeword_rows(code, a) for a in labels]
        grid = rows[0]
        for r in rows[1:]:
            grid = np.concatenate(
                [np.repeat(grid, r.shape[0], axis=0), np.tile(r, (grid.shape[0], 1))], axis=1
            )
        ref = np.concatenate([code.logical_digits(a) for a in labels])
        grid = np.concatenate([grid, np.tile(ref, (grid.shape[0], 1))], axis=1)
        digits.append(grid)
        amps.append(np.full(grid.shape[0], 1.0, dtype=complex))
    d = np.concatenate(digits)
    a = np.concatenate(amps)
    a /= np.linalg.norm(a)
    return SparseState.from_arrays(p, blocks * code.m + blocks * k, d, a)


# ---------------------------------------------------------------- oracles


def _block(code: QuantumCode, state, block):
    if block is None:
        block = list(range(code.m))
    if len(block) != code.m:
        raise BadParams("block must list m qupits")
    return list(block)


def _bit_stage(code: QuantumCode, lin: LinearCode, branch: SparseState, block) -> list[SparseState]:
    """Project onto each syndrome of `lin` and subtract the decoded error."""
    p = code.p
    sub = branch.digits[:, block]
    synd = sub @ lin.parity_check.T % p
    skeys = synd @ radix(p, synd.shape[1]) if synd.shape[1] else np.zeros(len(sub), np.int64)
    out = []
    for sk in np.unique(skeys):
        sel = skeys == sk
        e = decode_min_weight(lin, synd[np.argmax(sel)]).to_word()
        d = branch.digits[sel].copy()
        d[:, block] = (d[:, block] - e) % p
        out.append(SparseState.from_arrays(p, branch.n, d, branch.amps[sel]))
    return out


def _phase_stage(code: QuantumCode, branch: SparseState, block) -> list[SparseState]:
    """Fourier-conjugated bit correction w.r.t. C2-perp, done in the original basis.

    Projecting the Fourier-dual register onto syndrome s is the average of
    translations by C2 words weighted by characters, and subtracting an error
    e in the dual register is multiplication by w^{x.e}.
    """
    p = code.p
    lin = code.C2perp
    hp = lin.parity_check  # rows span C2
    r = hp.shape[0]
    if r == 0:
        return [branch]
    ks = np.array(list(itertools.product(range(p), repeat=r)), dtype=np.int64)
    shifts = ks @ hp % p  # translation vectors, one per k
    nrow = len(branch)
    big = np.repeat(branch.digits, len(ks), axis=0)
    big[:, block] = (big[:, block] + np.tile(shifts, (nrow, 1))) % p
    kidx = np.tile(np.arange(len(ks)), nrow)
    keys = row_keys(big, p)
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    table = np.zeros((len(uniq), len(ks)), dtype=complex)
    np.add.at(table, (inv.ravel(), kidx), np.repeat(branch.amps, len(ks)))
    spec = np.fft.fftn(table.reshape((len(uniq),) + (p,) * r), axes=tuple(range(1, r + 1)))
    spec = spec.reshape(len(uniq), -1) / p**r
    rows = big[first]
    w = omega(p)
    out = []
    for si, s in enumerate(ks):
        amps = spec[:, si]
        keep = np.abs(amps) > 1e-14
        if not keep.any():
            continue
        e = decode_min_weight(lin, s).to_word()
        d = rows[keep]
        ph = w ** ((d[:, block] @ e) % p)
        out.append(SparseState.from_arrays(p, branch.n, d, amps[keep] * ph, True))
    return out


def ideal_ec(code: QuantumCode, state, block: Sequence[int] | None = None) -> MixedState:
    """Exact recovery channel on the given block; syndrome records are discarded."""
    if isinstance(state, SparseState):
        state = MixedState.pure(state)
    block = _block(code, state, block)
    if code.p ** len(code.C2perp.parity_check) * max(len(b) for b in state.branches) > 5e7:
        raise TooLarge("phase-stage expansion too large")
    stage1 = []
    for b in state.branches:
        stage1 += _bit_stage(code, code.C1, b, block)
    stage1 = MixedState(state.p, state.n, stage1).merged().branches
    stage2 = []
    for b in stage1:
        stage2 += _phase_stage(code, b, block)
    return MixedState(state.p, state.n, stage2).merged()


def ideal_decode(code: QuantumCode, state, block: Sequence[int] | None = None) -> dict[int, float]:
    """Distribution of the logical value read in the computational basis."""
    if isinstance(state, SparseState):
        state = MixedState.pure(state)
    block = _block(code, state, block)
    p = code.p
    dist: dict[int, float] = {}
    total = state.total_weight()
    for b in state.branches:
        sub = b.digits[:, block]
        synd = sub @ code.C1.parity_check.T % p
        fixed = sub.copy()
        for sv in np.unique(synd, axis=0):
            sel = np.all(synd == sv, axis=1)
            e = decode_min_weight(code.C1, sv)
            if e.beyond_radius:
                raise OutsideCode("word is outside the correctable radius of C1")
            fixed[sel] = (fixed[sel] - e.to_word()) % p
        logical = code.logical_of_rows(fixed)
        probs = np.abs(b.amps) ** 2
        for a in np.unique(logical):
            dist[int(a)] = dist.get(int(a), 0.0) + float(probs[logical == a].sum()) / total
    return dict(sorted(dist.items()))


def in_code_space(code: QuantumCode, state, block: Sequence[int] | None = None, tol: float = 1e-9) -> bool:
    """True when every branch is unchanged by projecting the block onto the code space."""
    if isinstance(state, SparseState):
        state = MixedState.pure(state)
    block = _block(code, state, block)
    p = code.p
    for b in state.branches:
        sub = b.digits[:, block]
        if np.any(sub @ code.C1.parity_check.T % p):
            return False
        # code space = C2-translation invariant superpositions over C1
        for g in code.C2.generator:
            d = b.digits.copy()
            d[:, block] = (d[:, block] + g) % p
            moved = SparseState.from_arrays(p, b.n, d, b.amps)
            if abs(moved.inner(b) - b.norm() ** 2) > tol:
                return False
    return True


# ------------------------------------------------------------ universality


@dataclass
class UniversalityReport:
    p: int
    i: int
    n_max: int
    identity_on_complement: bool
    det_x: complex
    det_y: complex
    trace_x: complex
    trace_y: complex
    expected_trace: float
    trace_ok: bool
    det_ok: bool
    eigenphase: float
    closest_root_gap: float
    not_root_of_unity: bool
    commutator_norm: float
    noncommuting: bool

    @property
    def passed(self) -> bool:
        return (
            self.identity_on_complement
            and self.trace_ok
            and self.det_ok
            and self.not_root_of_unity
            and self.noncommuting
        )


def commutator_pair(p: int, i: int):
    h = fourier(p)
    hinv = h.conj().T
    q = np.eye(p, dtype=complex)
    q[i, i] = omega(p)
    qinv = q.conj().T
    x = h @ q @ hinv @ qinv
    y = h @ qinv @ hinv @ q
    return x, y


def root_of_unity_gap(theta: float, n_max: int) -> float:
    """Distance from theta to the nearest 2*pi*k/n with 1 <= n <= n_max."""
    best = np.inf
    for n in range(1, n_max + 1):
        k = np.round(theta * n / (2 * np.pi))
        best = min(best, abs(theta - 2 * np.pi * k / n))
    return float(best)


def univ_commutator_check(p: int, i: int, n_max: int = 1000, tol: float = 1e-10) -> UniversalityReport:
    if p <= 3 or not 0 <= i < p:
        raise BadParams("need p > 3 and 0 <= i < p")
    PrimeField(p)
    x, y = commutator_pair(p, i)
    w = omega(p)
    e_i = np.zeros(p, dtype=complex)
    e_i[i] = 1
    alpha = np.array([w ** (i * b % p) if b != i else 0 for b in range(p)]) / np.sqrt(p - 1)
    span = np.stack([e_i, alpha], axis=1)
    # orthonormal completion of S_i
    full, _ = np.linalg.qr(np.concatenate([span, np.eye(p)], axis=1))
    comp = full[:, 2:p]
    ident = bool(
        np.allclose(x @ comp, comp, atol=tol) and np.allclose(y @ comp, comp, atol=tol)
    )
    xr = span.conj().T @ x @ span
    yr = span.conj().T @ y @ span
    expected = (2 + (p - 1) * 2 * np.cos(2 * np.pi / p)) / p
    tx, ty = np.trace(xr), np.trace(yr)
    dx, dy = np.linalg.det(xr), np.linalg.det(yr)
    trace_ok = abs(tx - expected) < tol and abs(ty - expected) < tol
    det_ok = abs(dx - 1) < tol and abs(dy - 1) < tol
    phases = np.abs(np.angle(np.concatenate([np.linalg.eigvals(xr), np.linalg.eigvals(yr)])))
    theta = float(phases[0])
    gap = min(root_of_unity_gap(float(t), n_max) for t in phases)
    comm = xr @ yr - yr @ xr
    cn = float(np.linalg.norm(comm))
    return UniversalityReport(
        p, i, n_max, ident, complex(dx), complex(dy), complex(tx), complex(ty),
        float(expected), bool(trace_ok), bool(det_ok), theta, gap, gap > 1e-9, cn, cn > tol,
    )
