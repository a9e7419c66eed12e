"""Spread measurement by exhaustive single-fault injection.

The gadget's inputs are maximally entangled with reference qupits (code
blocks with one reference per block, or one reference per physical qupit
when no preceding error correction is assumed). A fault affects a set Q of
an output block when the faulty and fault-free runs agree on the reduced
state of (block minus Q) plus all references; the reported count is the
smallest such |Q|.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .._parallel import fork_map
from ..quantum_codes import QuantumCode, encoded_with_reference
from ..state_sim import MixedState, SparseState, branch_signature
from .circuit import Circuit
from .sim import BranchSim, reference_wires

CHUNK_LABELS = 1500
AGREE_TOL = 1e-7


@dataclass
class SpreadReport:
    gadget_id: str
    blocks: list[str]
    # (level, location qupits, faulty qupit, (c, c')) -> affected count per output block
    per_fault: dict[tuple, tuple[int, ...]] = field(default_factory=dict)
    # a fault at a location may act jointly on all its qupits: per block, the
    # size of the union of the sets affected by its single-qupit faults
    per_location: dict[tuple[int, tuple[int, ...]], tuple[int, ...]] = field(default_factory=dict)
    locations: int = 0

    @property
    def l(self) -> int:
        return max((max(v) for v in self.per_location.values() if v), default=0)

    def worst(self) -> tuple[tuple, tuple[int, ...]] | None:
        best = None
        for k, v in self.per_fault.items():
            if v and (best is None or max(v) > max(best[1])):
                best = (k, v)
        return best

    def to_dict(self) -> dict:
        return {
            "gadget": self.gadget_id,
            "blocks": self.blocks,
            "l": self.l,
            "locations": self.locations,
            "faults": len(self.per_fault),
            "per_location": [
                {"t": t, "qupits": list(q), "affected": list(v)} for (t, q), v in sorted(self.per_location.items())
            ],
        }


def bell_input(p: int, n: int) -> SparseState:
    """n system qupits each maximally entangled with its own reference (refs last)."""
    pats = np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64).reshape(-1, n)
    digits = np.concatenate([pats, pats], axis=1)
    amps = np.full(len(pats), 1 / np.sqrt(len(pats)), dtype=complex)
    return SparseState.from_arrays(p, 2 * n, digits, amps)


def reference_input(codes: Sequence[QuantumCode]) -> tuple[SparseState, int]:
    """Blocks first (in order), then one reference digit group per block."""
    if not codes:
        return SparseState(2, 0, {(): 1.0}), 0
    states = [encoded_with_reference(c, 1) for c in codes]
    p = codes[0].p
    digits = np.zeros((1, 0), dtype=np.int64)
    amps = np.ones(1, dtype=complex)
    for s in states:
        digits = np.concatenate(
            [np.repeat(digits, len(s.amps), axis=0), np.tile(s.digits, (len(digits), 1))], axis=1
        )
        amps = np.kron(amps, s.amps)
    n_ref = sum(c.logical_k for c in codes)
    # reorder: all block digits, then all reference digits
    order, ref_order, pos = [], [], 0
    for c in codes:
        order += list(range(pos, pos + c.m))
        ref_order += list(range(pos + c.m, pos + c.m + c.logical_k))
        pos += c.m + c.logical_k
    digits = digits[:, order + ref_order]
    return SparseState.from_arrays(p, digits.shape[1], digits, amps), n_ref


_ONE_QUPIT_CLIFFORD = {"id", "not", "gnot", "h", "phase_i", "mult", "gphase", "fourier"}


@dataclass
class _Chain:
    """Fault sites on one wire that are equivalent up to Pauli conjugation: a
    head location followed by idle or one-qupit Clifford locations."""

    wire: int
    head: tuple
    members: list = field(default_factory=list)  # (t, location qupits, Gate or None)
    killed: bool = False  # the wire is discarded before any further gate


def _fault_chains(circuit: Circuit) -> list[_Chain]:
    from ..fault_model import locations

    gate_at = {(t, g.targets): g for t, g in circuit.gates()}
    per_wire: dict[int, list] = {}
    for loc in locations(circuit):
        for q in loc.qupits:
            per_wire.setdefault(q, []).append(loc)
    chains = []
    for q, locs in per_wire.items():
        cur = None
        for loc in locs:
            if loc.gate in ("discard", "restart"):
                if cur is not None:
                    cur.killed = True
                cur = None
                if loc.gate == "discard":
                    continue
            elif cur is not None and loc.gate in _ONE_QUPIT_CLIFFORD:
                cur.members.append((loc.t, loc.qupits, gate_at.get((loc.t, loc.qupits))))
                continue
            cur = _Chain(q, (loc.t, loc.qupits))
            chains.append(cur)
    return chains


def _conjugated(p: int, chain: _Chain, c: int, c2: int):
    """Image of the Pauli (c, c2) at every member of the chain."""
    from ..fault_model import PauliFrame

    frame = PauliFrame(p, [chain.wire])
    frame.inject(chain.wire, c, c2)
    for t, locq, gate in chain.members:
        if gate is not None:
            frame.apply(gate)
        yield t, locq, (frame.x[chain.wire], frame.z[chain.wire])


def _ensemble_key(ens: MixedState) -> tuple:
    items = []
    for b in ens.branches:
        items.append((branch_signature(b.digits, b.amps, ens.p), int(round(b.norm() ** 2 * 1e8))))
    return tuple(sorted(items))


class _Overlap:
    """tr(rho_A rho_B) on a subset of columns, with normalised ensembles."""

    def __init__(self, ens: MixedState):
        self.p = ens.p
        self.digits = np.concatenate([b.digits for b in ens.branches])
        self.amps = np.concatenate([b.amps for b in ens.branches]) / np.sqrt(ens.total_weight())
        self.branch = np.concatenate([np.full(len(b.amps), i) for i, b in enumerate(ens.branches)])

    def matrices(self, other: "_Overlap", keep: Sequence[int]):
        n = self.digits.shape[1]
        rest = [j for j in range(n) if j not in set(keep)]
        out = []
        kk = [o.digits[:, list(keep)] for o in (self, other)]
        allk = np.concatenate(kk)
        _, kinv = np.unique(allk, axis=0, return_inverse=True) if len(keep) else (None, np.zeros(len(allk), int))
        kinv = np.asarray(kinv).ravel()
        nrows = int(kinv.max()) + 1 if len(kinv) else 0
        split = len(kk[0])
        for o, ki in ((self, kinv[:split]), (other, kinv[split:])):
            cols = np.concatenate([o.branch[:, None], o.digits[:, rest]], axis=1)
            _, cinv = np.unique(cols, axis=0, return_inverse=True)
            cinv = np.asarray(cinv).ravel()
            out.append(sp.csr_matrix((o.amps, (ki, cinv)), shape=(nrows, int(cinv.max()) + 1)))
        return out

    def distance2(self, other: "_Overlap", keep: Sequence[int], self_tr: float | None = None) -> float:
        ma, mb = self.matrices(other, keep)
        ab = (ma.conj().T @ mb)
        aa = (ma.conj().T @ ma)
        bb = (mb.conj().T @ mb)
        f = lambda x: float(np.sum(np.abs(x.data) ** 2))
        return f(aa) + f(bb) - 2 * f(ab)


def affected_set(clean: MixedState, faulty: MixedState, block: Sequence[int], refs: Sequence[int]) -> tuple[int, ...]:
    """A smallest Q with block\\Q plus refs unchanged (column indices into the
    ensembles); the first such Q in lexicographic order."""
    a, b = _Overlap(clean), _Overlap(faulty)
    block = list(block)
    for size in range(len(block) + 1):
        for Q in itertools.combinations(block, size):
            keep = [w for w in block if w not in Q] + list(refs)
            if a.distance2(b, keep) < AGREE_TOL:
                return Q
    return tuple(block)


def affected_count(clean: MixedState, faulty: MixedState, block: Sequence[int], refs: Sequence[int]) -> int:
    return len(affected_set(clean, faulty, block, refs))


def measure_spread(gadget, preceding_ec: bool = True, chunk_labels: int = CHUNK_LABELS,
                   in_codes: Sequence[QuantumCode] | None = None, jobs: int = 1) -> SpreadReport:
    """Exhaustive single-Pauli injection after every location of the gadget.

    Chunks of injection levels are independent; ``jobs`` > 1 runs them in
    forked workers with identical results.
    """
    circ: Circuit = gadget.circuit
    p = circ.p
    n_in = len(circ.inputs)
    if preceding_ec and gadget.in_blocks:
        codes = list(in_codes or getattr(gadget, "in_codes", None) or [gadget.code] * len(gadget.in_blocks))
        state, n_ref = reference_input(codes)
        order = [w for blk in gadget.in_blocks for w in blk]
        if sorted(order) != sorted(circ.inputs):
            raise ValueError("input blocks must cover the circuit inputs")
    else:
        state, n_ref = bell_input(p, n_in), n_in
        order = list(circ.inputs)
    refs = reference_wires(n_ref)
    out_blocks = [list(b) for b in gadget.out_blocks]
    names = [f"out{i}" for i in range(len(out_blocks))]
    if gadget.extra_outputs:
        out_blocks.append(list(gadget.extra_outputs))
        names.append("extra")
    out_wires = [w for blk in out_blocks for w in blk]
    result_wires = out_wires + refs
    col = {w: i for i, w in enumerate(result_wires)}
    ref_cols = [col[w] for w in refs]
    block_cols = [[col[w] for w in blk] for blk in out_blocks]

    chains = _fault_chains(circ)
    paulis = [(c, c2) for c in range(p) for c2 in range(p) if (c, c2) != (0, 0)]
    by_level: dict[int, list] = {}
    meta: dict[int, tuple] = {}
    label = 1
    for ch in chains:
        if ch.killed:
            continue
        t, locq = ch.head
        for c, c2 in paulis:
            by_level.setdefault(t, []).append((ch.wire, c, c2, label))
            meta[label] = (t, tuple(locq), ch.wire, (c, c2))
            label += 1

    # chunk boundaries over levels
    chunks, cur, start = [], 0, 0
    for t in range(circ.depth):
        cur += len(by_level.get(t, []))
        if cur >= chunk_labels:
            chunks.append((start, t + 1))
            start, cur = t + 1, 0
    if start < circ.depth:
        chunks.append((start, circ.depth))

    base = BranchSim.from_state(state, order + refs)
    snapshots = {}
    clean_sim = base.copy()
    starts = {s for s, _ in chunks}
    for t in range(circ.depth):
        if t in starts:
            clean_sim.merge()
            snapshots[t] = clean_sim.copy()
        clean_sim.run(circ, t, t + 1)
    clean = clean_sim.ensembles(result_wires)[0]

    n_locs = len({ch.head for ch in chains} | {(t, q) for ch in chains for t, q, _ in ch.members})
    report = SpreadReport(gadget.implements, names, locations=n_locs)
    empty = tuple(() for _ in out_blocks)

    def run_chunk(bounds):
        s, e = bounds
        cache: dict[tuple, tuple[tuple[int, ...], ...]] = {_ensemble_key(clean): empty}
        found = {}
        sim = snapshots[s].copy()
        faults = {t: by_level[t] for t in range(s, e) if t in by_level}
        sim.run(circ, s, circ.depth, faults)
        ens = sim.ensembles(result_wires)
        for lab in (l for t in faults for *_, l in faults[t]):
            faulty = ens.get(lab)
            if faulty is None:
                hit = empty
            else:
                key = _ensemble_key(faulty)
                hit = cache.get(key)
                if hit is None:
                    hit = tuple(
                        tuple(result_wires[c] for c in affected_set(clean, faulty, bc, ref_cols)) for bc in block_cols
                    )
                    cache[key] = hit
            found[meta[lab]] = hit
        return found

    sets: dict[tuple, tuple[tuple[int, ...], ...]] = {}
    for found in fork_map(run_chunk, chunks, jobs):
        sets.update(found)
    for ch in chains:
        for pl in paulis:
            head = (ch.head[0], tuple(ch.head[1]), ch.wire, pl)
            hit = empty if ch.killed else sets[head]
            sets[head] = hit
            for t, locq, image in _conjugated(p, ch, *pl):
                sets[(t, tuple(locq), ch.wire, image)] = hit
    union: dict[tuple, list[set]] = {}
    for (t, locq, q, pl), hit in sets.items():
        report.per_fault[(t, locq, q, pl)] = tuple(len(h) for h in hit)
        acc = union.setdefault((t, locq), [set() for _ in out_blocks])
        for a, h in zip(acc, hit):
            a.update(h)
    report.per_location = {k: tuple(len(a) for a in v) for k, v in union.items()}
    return report
