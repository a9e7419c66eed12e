"""Noiseless logical-action checks for gadgets against a logical-level oracle."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadParams
from ..quantum_codes import QuantumCode, codeword_rows
from ..state_sim import MixedState, SparseState
from .gates import Gate, gate_matrix
from .sim import BranchSim

FIDELITY_TOL = 1e-9

_LABEL = re.compile(r"^([a-z_-]+)(?:\((\d+)\))?$")


@dataclass
class VerifyReport:
    gadget: str
    cases: int = 0
    min_fidelity: float = 1.0
    failures: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.min_fidelity > 1 - FIDELITY_TOL

    def to_dict(self) -> dict:
        return {"gadget": self.gadget, "cases": self.cases, "min_fidelity": self.min_fidelity, "ok": self.ok,
                "failures": [list(map(str, f)) for f in self.failures[:20]]}


def logical_map(gadget) -> np.ndarray:
    """Matrix from the logical input space to the logical output space
    (blocks in order, first block most significant)."""
    p = gadget.code.p
    name, param = _LABEL.match(gadget.implements).groups()
    n_in = len(gadget.in_blocks)
    dims_in = [c.logical_dim for c in gadget.in_codes]
    dims_out = [c.logical_dim for c in gadget.out_codes]
    din, dout = int(np.prod(dims_in)), int(np.prod(dims_out))
    if name == "ec":
        return np.eye(din)
    if name == "degree-reduction":
        u = np.zeros((dout, din))
        for a in range(dims_in[0]):
            if n_in == 1:
                u[a * dims_out[1] + a, a] = 1
            else:
                for b in range(dims_in[1]):
                    u[a * dims_out[1] + (a + b) % p, a * dims_in[1] + b] = 1
        return u
    gate = {"phase": "phase_i", "toffoli": "toffoli" if p == 2 else "gtoffoli"}.get(name, name)
    params = (int(param),) if param is not None else ()
    if gate == "fourier" and not params:
        params = (1,)
    if any(d != p for d in dims_in + dims_out):
        raise BadParams("logical oracle needs one logical qupit per block")
    return gate_matrix(p, Gate(gate, tuple(range(n_in)), params))


def _encode(codes: list[QuantumCode], vec: np.ndarray) -> SparseState:
    """sum_a vec[a] |S_a1>|S_a2>... over the given codes."""
    dims = [c.logical_dim for c in codes]
    digits, amps = [], []
    for idx, labels in enumerate(itertools.product(*(range(d) for d in dims))):
        if abs(vec[idx]) < 1e-15:
            continue
        grid = np.zeros((1, 0), dtype=np.int64)
        for c, a in zip(codes, labels):
            rows = codeword_rows(c, a)
            grid = np.concatenate([np.repeat(grid, len(rows), axis=0), np.tile(rows, (len(grid), 1))], axis=1)
        norm = 1 / np.sqrt(len(grid))
        digits.append(grid)
        amps.append(np.full(len(grid), vec[idx] * norm, dtype=complex))
    n = sum(c.m for c in codes)
    return SparseState.from_arrays(codes[0].p, n, np.concatenate(digits), np.concatenate(amps))


def _run(gadget, state: SparseState, out_wires) -> MixedState:
    order = [w for blk in gadget.in_blocks for w in blk]
    sim = BranchSim.from_state(state, order)
    sim.run(gadget.circuit)
    return sim.ensembles(out_wires)[0]


def _random_vectors(dim: int, count: int, rng) -> list[np.ndarray]:
    out = []
    for _ in range(count):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out.append(v / np.linalg.norm(v))
    return out


def verify_gadget(gadget, superpositions: int = 3, seed: int = 0, inputs=None) -> VerifyReport:
    """Fidelity of the noiseless output with the oracle on every logical basis
    input (or the listed ``inputs``) and on random superpositions."""
    rep = VerifyReport(gadget.implements)
    name = _LABEL.match(gadget.implements).group(1)
    if name == "encode":
        return _verify_encode(gadget, rep)
    if name == "decode":
        return _verify_decode(gadget, rep)
    if not gadget.out_blocks:
        return rep
    u = logical_map(gadget)
    din = u.shape[1]
    out_wires = [w for blk in gadget.out_blocks for w in blk]
    vectors = []
    basis = range(din) if inputs is None else inputs
    for i in basis:
        v = np.zeros(din, dtype=complex)
        v[i] = 1
        vectors.append((("basis", i), v))
    rng = np.random.default_rng(seed)
    for j, v in enumerate(_random_vectors(din, superpositions, rng)):
        vectors.append((("superposition", j), v))
    for key, v in vectors:
        got = _run(gadget, _encode(gadget.in_codes, v), out_wires)
        want = _encode(gadget.out_codes, u @ v)
        fid = got.fidelity(want)
        rep.cases += 1
        rep.min_fidelity = min(rep.min_fidelity, fid)
        if fid <= 1 - FIDELITY_TOL:
            rep.failures.append((key, fid))
    return rep


def _verify_encode(gadget, rep: VerifyReport) -> VerifyReport:
    code = gadget.code
    for a in range(code.logical_dim):
        state = SparseState.basis(code.p, [a] * code.m)
        got = _run(gadget, state, list(gadget.out_blocks[0]))
        vec = np.zeros(code.logical_dim)
        vec[a] = 1
        fid = got.fidelity(_encode([code], vec))
        rep.cases += 1
        rep.min_fidelity = min(rep.min_fidelity, fid)
        if fid <= 1 - FIDELITY_TOL:
            rep.failures.append((a, fid))
    return rep


def _verify_decode(gadget, rep: VerifyReport) -> VerifyReport:
    code = gadget.code
    out = list(gadget.out_blocks[0]) + list(gadget.extra_outputs)
    n_extra = len(gadget.extra_outputs)
    for a in range(code.logical_dim):
        vec = np.zeros(code.logical_dim)
        vec[a] = 1
        got = _run(gadget, _encode([code], vec), out)
        rho = got.reduced(range(code.m, code.m + n_extra)).matrix
        idx = int(np.dot([a] * n_extra, code.p ** np.arange(n_extra - 1, -1, -1)))
        fid = float(np.real(rho[idx, idx]))
        rep.cases += 1
        rep.min_fidelity = min(rep.min_fidelity, fid)
        if fid <= 1 - FIDELITY_TOL:
            rep.failures.append((a, fid))
    return rep
