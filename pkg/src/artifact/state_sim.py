"""Dense and sparse statevector simulation of qupit registers.

Qupit 0 is the most significant digit of a basis index everywhere in the
package. Sparse states hold a digit matrix (one row per basis string) and a
parallel amplitude vector; all gate kernels are vectorised over rows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    BadTargets,
    DimMismatch,
    LengthMismatch,
    NotBijective,
    NotUnitary,
    TooLarge,
)

UNITARY_TOL = 1e-10
PRUNE_TOL = 1e-14
DENSE_CAP = 25_000_000
REDUCED_CAP = 2**14


def omega(p: int) -> complex:
    return np.exp(2j * np.pi / p)


# ---------------------------------------------------------------- matrices


def shift(p: int) -> np.ndarray:
    """B: |a> -> |a+1>."""
    return np.roll(np.eye(p, dtype=complex), 1, axis=0)


def clock(p: int) -> np.ndarray:
    """P: |a> -> w^a |a>."""
    return np.diag(omega(p) ** np.arange(p))


def fourier(p: int, r: int = 1) -> np.ndarray:
    """W(w^r): |a> -> p^{-1/2} sum_b w^{rab} |b>."""
    a = np.arange(p)
    return omega(p) ** (r * np.outer(a, a) % p) / np.sqrt(p)


def hadamard() -> np.ndarray:
    return fourier(2)


def pauli_matrix(p: int, label: Sequence[tuple[int, int]]) -> np.ndarray:
    """Tensor product of B^c P^c' factors, first pair on qupit 0."""
    out = np.ones((1, 1), dtype=complex)
    B, P = shift(p), clock(p)
    for c, cp in label:
        f = np.linalg.matrix_power(B, c % p) @ np.linalg.matrix_power(P, cp % p)
        out = np.kron(out, f)
    return out


def sigma(name: str) -> np.ndarray:
    """Qubit Paulis with the real convention sigma_y = sigma_z sigma_x."""
    x = shift(2).real.astype(complex)
    z = clock(2).real.astype(complex)
    return {"i": np.eye(2, dtype=complex), "x": x, "z": z, "y": z @ x}[name]


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0
    )


# ------------------------------------------------------------ row kernels


def radix(p: int, n: int) -> np.ndarray:
    return p ** np.arange(n - 1, -1, -1, dtype=np.int64)


def pattern_index(digits: np.ndarray, targets: Sequence[int], p: int) -> np.ndarray:
    if len(targets) == 0:
        return np.zeros(digits.shape[0], dtype=np.int64)
    return digits[:, list(targets)].astype(np.int64) @ radix(p, len(targets))


def all_patterns(p: int, t: int) -> np.ndarray:
    if t == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(p), repeat=t)), dtype=np.int64)


def row_keys(digits: np.ndarray, p: int) -> np.ndarray:
    """Integer key per row; falls back to a structured view when too wide."""
    n = digits.shape[1]
    if n == 0:
        return np.zeros(digits.shape[0], dtype=np.int64)
    if n * np.log2(p) < 62:
        return digits.astype(np.int64) @ radix(p, n)
    return np.ascontiguousarray(digits.astype(np.int16)).view(
        np.dtype((np.void, 2 * n))
    ).ravel()


def combine(digits: np.ndarray, amps: np.ndarray, p: int, prune: float = PRUNE_TOL):
    """Sum amplitudes of repeated rows, drop tiny ones, sort rows."""
    if digits.shape[0] == 0:
        return digits, amps
    keys = row_keys(digits, p)
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    summed = np.zeros(uniq.shape[0], dtype=complex)
    np.add.at(summed, inv.ravel(), amps)
    keep = np.abs(summed) >= prune
    return digits[first][keep], summed[keep]


def perm_table(p: int, t: int, fn: Callable, phase: Callable | None = None):
    """Tabulate a classical map (and optional phase) on F_p^t patterns."""
    pats = all_patterns(p, t)
    out = np.array([tuple(int(v) % p for v in fn(tuple(int(x) for x in row))) for row in pats], dtype=np.int64).reshape(-1, t)
    idx = out @ radix(p, t) if t else np.zeros(1, np.int64)
    if len(np.unique(idx)) != len(idx):
        raise NotBijective("classical map is not a bijection on the target digits")
    ph = None
    if phase is not None:
        ph = np.array([complex(phase(tuple(int(x) for x in row))) for row in pats])
        if not np.allclose(np.abs(ph), 1, atol=UNITARY_TOL):
            raise NotUnitary("phase function must return unit-modulus values")
    return out, ph


def apply_table_rows(digits, amps, targets, p, table, phase=None):
    idx = pattern_index(digits, targets, p)
    new = digits.copy()
    new[:, list(targets)] = table[idx]
    if phase is not None:
        amps = amps * phase[idx]
    return new, amps


def apply_unitary_rows(digits, amps, targets, p, u):
    """Expand each row over the nonzero column entries of u."""
    t = len(targets)
    idx = pattern_index(digits, targets, p)
    col = u[:, idx]  # (p^t, rows)
    out_pat, row_sel = np.nonzero(np.abs(col) > 0)
    pats = all_patterns(p, t)
    new = digits[row_sel].copy()
    new[:, list(targets)] = pats[out_pat]
    new_amps = amps[row_sel] * col[out_pat, row_sel]
    return combine(new, new_amps, p)


def _check_targets(targets: Sequence[int], n: int):
    if len(set(targets)) != len(targets) or any(not 0 <= q < n for q in targets):
        raise BadTargets(f"invalid targets {list(targets)} for {n} qupits")


def _check_unitary(u: np.ndarray, p: int, t: int):
    u = np.asarray(u, dtype=complex)
    if u.shape != (p**t, p**t):
        raise BadTargets(f"matrix shape {u.shape} does not match {t} targets")
    if not is_unitary(u):
        raise NotUnitary("matrix is not unitary within tolerance")
    return u


# ------------------------------------------------------------------ states


class DenseState:
    def __init__(self, p: int, n: int, amplitudes=None):
        if p**n > DENSE_CAP:
            raise TooLarge(f"{p}^{n} amplitudes exceed the dense cap")
        self.p, self.n = p, n
        if amplitudes is None:
            amplitudes = np.zeros(p**n, dtype=complex)
            amplitudes[0] = 1
        self.amplitudes = np.asarray(amplitudes, dtype=complex).reshape(p**n)

    @classmethod
    def basis(cls, p: int, digits: Sequence[int]) -> "DenseState":
        s = cls(p, len(digits), np.zeros(p ** len(digits), complex))
        s.amplitudes[int(np.dot(digits, radix(p, len(digits))))] = 1
        return s

    def copy(self) -> "DenseState":
        return DenseState(self.p, self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_sparse(self) -> "SparseState":
        nz = np.nonzero(np.abs(self.amplitudes) >= PRUNE_TOL)[0]
        digits = (nz[:, None] // radix(self.p, self.n)) % self.p
        return SparseState.from_arrays(self.p, self.n, digits, self.amplitudes[nz])

    def terms(self) -> dict[tuple[int, ...], complex]:
        return self.to_sparse().terms()

    def dump(self) -> str:
        return self.to_sparse().dump()


class SparseState:
    """Amplitude map over basis strings, stored as parallel arrays."""

    def __init__(self, p: int, n: int, terms: Mapping[Sequence[int], complex] | None = None):
        self.p, self.n = p, n
        if terms is None:
            terms = {(0,) * n: 1.0}
        keys = list(terms.keys())
        digits = np.array([list(k) for k in keys], dtype=np.int64).reshape(len(keys), n)
        amps = np.array([terms[k] for k in keys], dtype=complex)
        self.digits, self.amps = combine(digits % p, amps, p)

    @classmethod
    def from_arrays(cls, p, n, digits, amps, normalized=False) -> "SparseState":
        s = cls.__new__(cls)
        s.p, s.n = p, n
        if normalized:
            s.digits, s.amps = np.asarray(digits, np.int64), np.asarray(amps, complex)
        else:
            s.digits, s.amps = combine(np.asarray(digits, np.int64).reshape(-1, n), np.asarray(amps, complex), p)
        return s

    @classmethod
    def basis(cls, p: int, digits: Sequence[int]) -> "SparseState":
        return cls(p, len(digits), {tuple(digits): 1.0})

    def copy(self) -> "SparseState":
        return SparseState.from_arrays(self.p, self.n, self.digits.copy(), self.amps.copy(), True)

    def __len__(self):
        return self.digits.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "SparseState":
        return SparseState.from_arrays(self.p, self.n, self.digits, self.amps / self.norm(), True)

    def terms(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in row): complex(a) for row, a in zip(self.digits, self.amps)}

    def to_dense(self) -> DenseState:
        vec = np.zeros(self.p**self.n, dtype=complex)
        np.add.at(vec, self.digits @ radix(self.p, self.n), self.amps)
        return DenseState(self.p, self.n, vec)

    def inner(self, other: "SparseState") -> complex:
        """<self|other>."""
        if (self.p, self.n) != (other.p, other.n):
            raise DimMismatch("states live on different registers")
        ka, kb = row_keys(self.digits, self.p), row_keys(other.digits, self.p)
        common, ia, ib = np.intersect1d(ka, kb, return_indices=True)
        return complex(np.vdot(self.amps[ia], other.amps[ib]))

    def tensor(self, other: "SparseState") -> "SparseState":
        na, nb = len(self), len(other)
        d = np.concatenate(
            [np.repeat(self.digits, nb, axis=0), np.tile(other.digits, (na, 1))], axis=1
        )
        a = np.repeat(self.amps, nb) * np.tile(other.amps, na)
        return SparseState.from_arrays(self.p, self.n + other.n, d, a)

    def permute(self, order: Sequence[int]) -> "SparseState":
        """New state whose qupit j is old qupit order[j]."""
        return SparseState.from_arrays(self.p, self.n, self.digits[:, list(order)], self.amps)

    def dump(self) -> str:
        sep = "" if self.p <= 10 else ","
        rows = []
        for row, a in zip(self.digits, self.amps):
            rows.append((sep.join(str(int(v)) for v in row), a))
        rows.sort(key=lambda r: r[0])
        return "".join(f"{b}\t{a.real:.17g}\t{a.imag:.17g}\n" for b, a in rows)


def apply_unitary(state, u, targets: Sequence[int]):
    """Apply a p^t x p^t unitary to the listed qupits (returns a new state)."""
    _check_targets(targets, state.n)
    u = _check_unitary(u, state.p, len(targets))
    if isinstance(state, DenseState):
        return _dense_apply(state, u, targets)
    d, a = apply_unitary_rows(state.digits, state.amps, targets, state.p, u)
    return SparseState.from_arrays(state.p, state.n, d, a, True)


def _dense_apply(state: DenseState, u: np.ndarray, targets: Sequence[int]) -> DenseState:
    p, n, t = state.p, state.n, len(targets)
    psi = state.amplitudes.reshape((p,) * n)
    g = u.reshape((p,) * (2 * t))
    out = np.tensordot(g, psi, axes=(list(range(t, 2 * t)), list(targets)))
    # tensordot puts the acted-on axes first; move them back
    rest = [q for q in range(n) if q not in targets]
    order = list(targets) + rest
    out = np.moveaxis(out, list(range(n)), order)
    return DenseState(p, n, out.reshape(-1))


def apply_perm_phase(state, mapping: Callable, phase: Callable | None, targets: Sequence[int]):
    """Apply a basis permutation on the targets, scaled by phase(pre-image digits)."""
    _check_targets(targets, state.n)
    table, ph = perm_table(state.p, len(targets), mapping, phase)
    if isinstance(state, DenseState):
        sp_state = state.to_sparse()
        d, a = apply_table_rows(sp_state.digits, sp_state.amps, targets, state.p, table, ph)
        return SparseState.from_arrays(state.p, state.n, d, a).to_dense()
    d, a = apply_table_rows(state.digits, state.amps, targets, state.p, table, ph)
    # a permutation keeps rows distinct, only order changes
    return SparseState.from_arrays(state.p, state.n, d, a)


# --------------------------------------------------------- mixed states


@dataclass
class DensityMatrix:
    p: int
    n: int
    matrix: np.ndarray

    def check(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        herm = np.allclose(m, m.conj().T, atol=tol)
        tr = abs(np.trace(m) - 1) < tol
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2).min() >= -1e-9
        return bool(herm and tr and ev)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def pure_density(state) -> DensityMatrix:
    v = state.amplitudes if isinstance(state, DenseState) else state.to_dense().amplitudes
    return DensityMatrix(state.p, state.n, np.outer(v, v.conj()))


def partial_trace(state, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (in the listed order)."""
    keep = list(keep)
    _check_targets(keep, state.n)
    p = state.p
    dim = p ** len(keep)
    if dim > REDUCED_CAP:
        raise TooLarge(f"reduced dimension {dim} exceeds {REDUCED_CAP}")
    if isinstance(state, DenseState):
        state = state.to_sparse()
    return reduced_from_rows(state.digits, state.amps, keep, p)


def reduced_from_rows(digits, amps, keep, p) -> DensityMatrix:
    n = digits.shape[1]
    rest = [q for q in range(n) if q not in keep]
    rows = pattern_index(digits, keep, p)
    cols = row_keys(digits[:, rest], p) if rest else np.zeros(len(amps), np.int64)
    _, col_idx = np.unique(cols, return_inverse=True)
    dim = p ** len(keep)
    ncol = int(col_idx.max()) + 1 if len(col_idx) else 0
    m = sp.csr_matrix((amps, (rows, col_idx.ravel())), shape=(dim, ncol))
    rho = (m @ m.conj().T).toarray()
    return DensityMatrix(p, len(keep), rho)


def trace_distance(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """Sum of absolute eigenvalues of r1 - r2 (no factor 1/2)."""
    a = r1.matrix if isinstance(r1, DensityMatrix) else np.asarray(r1)
    b = r2.matrix if isinstance(r2, DensityMatrix) else np.asarray(r2)
    if a.shape != b.shape:
        raise DimMismatch(f"{a.shape} vs {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def pauli_decompose(mat: np.ndarray, p: int, verify: bool = True) -> dict[tuple[tuple[int, int], ...], complex]:
    """Coefficients of ``mat`` in the B^c P^c' product basis.

    Uses tr(M U^dag) = sum_x M[x+c, x] w^{-c'.x}, i.e. an FFT of each shifted
    diagonal.
    """
    mat = np.asarray(mat, dtype=complex)
    dim = mat.shape[0]
    d = int(round(np.log(dim) / np.log(p)))
    if p**d != dim or mat.shape != (dim, dim):
        raise DimMismatch(f"{mat.shape} is not p^d square for p={p}")
    xs = all_patterns(p, d)
    r = radix(p, d) if d else np.zeros(0, np.int64)
    xi = xs @ r if d else np.zeros(1, np.int64)
    out = {}
    for c in xs:
        shifted = ((xs + c) % p) @ r if d else xi
        diag = mat[shifted, xi].reshape((p,) * d) if d else mat[shifted, xi]
        coeffs = np.fft.fftn(diag) / dim if d else diag
        flat = np.asarray(coeffs).reshape(-1)
        for cp, val in zip(xs, flat):
            if abs(val) > 1e-13:
                out[tuple(zip((int(v) for v in c), (int(v) for v in cp)))] = complex(val)
    if verify:
        recon = np.zeros_like(mat)
        for label, coef in out.items():
            recon += coef * pauli_matrix(p, label)
        if np.abs(recon - mat).max() > 1e-10:
            raise ArithmeticError("Pauli reconstruction failed")
    return out


# ----------------------------------------------------------------- channels


@dataclass(frozen=True)
class Channel:
    """Stinespring form: append ``add_count`` blank qupits, apply, trace out."""

    p: int
    add_count: int
    unitary: np.ndarray
    discard: tuple[int, ...]

    @property
    def system_size(self) -> int:
        total = int(round(np.log(self.unitary.shape[0]) / np.log(self.p)))
        return total - self.add_count

    def kraus(self) -> list[np.ndarray]:
        ds = self.p**self.system_size
        da = self.p**self.add_count
        u = self.unitary.reshape(ds, da, ds, da)
        return [u[:, e, :, 0] for e in range(da)]

    def apply_density(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus())


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_channel(p: int, d: int, seed: int) -> Channel:
    if d > 2 or d < 1:
        raise TooLarge("random channels are limited to 1 or 2 qupits")
    rng = np.random.default_rng(seed)
    u = haar_unitary(p ** (2 * d), rng)
    return Channel(p, d, u, tuple(range(d, 2 * d)))


def identity_channel(p: int, d: int) -> Channel:
    return Channel(p, d, np.eye(p ** (2 * d), dtype=complex), tuple(range(d, 2 * d)))


def apply_channel_purified(state: SparseState, ch: Channel, targets: Sequence[int]) -> SparseState:
    """Apply the channel keeping its environment as extra trailing qupits."""
    n = state.n
    env = SparseState.basis(state.p, [0] * ch.add_count)
    big = state.tensor(env)
    return apply_unitary(big, ch.unitary, list(targets) + list(range(n, n + ch.add_count)))


# ----------------------------------------------------------- ensembles


def branch_signature(digits: np.ndarray, amps: np.ndarray, p: int) -> bytes:
    """Hashable fingerprint that is equal for proportional branches."""
    if len(amps) == 0:
        return b""
    keys = row_keys(digits, p)
    order = np.argsort(keys, kind="stable")
    a = amps[order] / amps[order[0]]
    q = np.round(np.concatenate([a.real, a.imag]) * 1e8).astype(np.int64)
    return np.ascontiguousarray(keys[order]).tobytes() + q.tobytes()


class MixedState:
    """Ensemble of unnormalised pure branches; weight of a branch is its norm squared."""

    def __init__(self, p: int, n: int, branches: Iterable[SparseState]):
        self.p, self.n = p, n
        self.branches = [b for b in branches if len(b) and b.norm() > 1e-12]

    @classmethod
    def pure(cls, state: SparseState) -> "MixedState":
        return cls(state.p, state.n, [state])

    def weights(self) -> np.ndarray:
        return np.array([b.norm() ** 2 for b in self.branches])

    def total_weight(self) -> float:
        return float(self.weights().sum())

    def merged(self) -> "MixedState":
        groups: dict[bytes, list[int]] = {}
        for i, b in enumerate(self.branches):
            groups.setdefault(branch_signature(b.digits, b.amps, self.p), []).append(i)
        out = []
        for idx in groups.values():
            rep = self.branches[idx[0]]
            total = sum(self.branches[i].norm() ** 2 for i in idx)
            scale = np.sqrt(total) / rep.norm()
            out.append(SparseState.from_arrays(self.p, self.n, rep.digits, rep.amps * scale, True))
        return MixedState(self.p, self.n, out)

    def reduced(self, keep: Sequence[int]) -> DensityMatrix:
        keep = list(keep)
        dim = self.p ** len(keep)
        if dim > REDUCED_CAP:
            raise TooLarge(f"reduced dimension {dim} exceeds {REDUCED_CAP}")
        rho = np.zeros((dim, dim), dtype=complex)
        for b in self.branches:
            rho += reduced_from_rows(b.digits, b.amps, keep, self.p).matrix
        return DensityMatrix(self.p, len(keep), rho / self.total_weight())

    def fidelity(self, target: SparseState) -> float:
        """<t|rho|t> for a normalised pure target on the same register."""
        t = target.normalized()
        return float(sum(abs(t.inner(b)) ** 2 for b in self.branches) / self.total_weight())
