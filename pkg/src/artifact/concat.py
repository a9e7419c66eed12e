"""Recursive simulation: replace every location by an EC-then-gadget rectangle.

One application maps a circuit M over qupits to M' over code blocks. Each
level of M becomes a working period separated by barriers: error correction
on every participating block, then the gate's gadget. Inputs arrive as
repeated strings (a digit a is supplied as a^m) and are encoded in a
leading period; a trailing period decodes each output block into m digits,
so M_r has n * m**r inputs and outputs.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ForeignGate, LengthMismatch, NotTransversal, TooLarge, Unsupported
from .fault_model import Location, PauliFrame, RectangleTree, locations
from .gadgets.circuit import Circuit, CircuitBuilder
from .gadgets.gates import Gate, gate_set_for
from .gadgets.library import (
    Gadget,
    decode_gadget,
    ec_gadget,
    encode_gadget,
    fourier_gadget,
    toffoli_gadget_poly,
    transversal_gadget,
)
from .quantum_codes import QuantumCode

SIZE_CAP = 10**7
ENCODE_PERIOD = -1


@dataclass
class SimulatedCircuit:
    circuit: Circuit
    r: int
    code: QuantumCode | None
    # original input/output wire index -> wires of the compiled circuit (m**r each)
    input_blocks: list[tuple[int, ...]]
    output_blocks: list[tuple[int, ...]]
    # (period id, first level, end level); period -1 encodes, period D decodes
    periods: list[tuple[int, int, int]] = field(default_factory=list)
    # gadget names emitted in each period of the last level of recursion
    period_gadgets: list[list[str]] = field(default_factory=list)
    tree: RectangleTree | None = None
    # leaves that belong to no source location (only when the source has none)
    unattributed: int = 0
    # per working period: source wire -> its compiled block at the period end
    blocks_after: dict[int, dict[int, tuple[int, ...]]] = field(default_factory=dict)
    ec: bool = True

    @property
    def n_qupits(self) -> int:
        return sum(len(blk) for blk in self.input_blocks)

    def gadget_counts(self) -> Counter:
        return Counter(name for names in self.period_gadgets for name in names)


# ------------------------------------------------------------ gate gadgets


def _compose(code: QuantumCode, first: Gadget, second: Gadget, label: str) -> Gadget:
    """Single-block gadget running ``first`` then ``second``."""
    b = CircuitBuilder(code.p, label)
    blk = b.input_block("in0", code.m)
    w1 = b.append_circuit(first.circuit, blk)
    mid = [w1[w] for w in first.out_blocks[0]]
    w2 = b.append_circuit(second.circuit, mid)
    out = [w2[w] for w in second.out_blocks[0]]
    circ = b.build(out, {"in0": blk, "out0": out})
    return Gadget(circ, code, label, [tuple(blk)], [tuple(out)])


_GADGETS: dict[tuple[int, str, tuple[int, ...]], tuple[QuantumCode, Gadget]] = {}


def _gadget_cached(code: QuantumCode, name: str, params: tuple[int, ...]) -> Gadget:
    key = (id(code), name, params)
    hit = _GADGETS.get(key)
    if hit is None or hit[0] is not code:
        hit = (code, _build_gadget(code, name, params))
        _GADGETS[key] = hit
    return hit[1]


def _build_gadget(code: QuantumCode, name: str, params: tuple[int, ...]) -> Gadget:
    p = code.p
    if name == "add":
        return encode_gadget(code)
    if name == "toffoli":
        raise ForeignGate("no Toffoli gadget is compiled for CSS codes")
    if name == "gtoffoli":
        return toffoli_gadget_poly(code)
    if name == "fourier":
        r = params[0] % p if params else 1
        base = fourier_gadget(code)
        if r == 1:
            return base
        # W_r = mult(r^-1) after W_1
        return _compose(code, base, transversal_gadget(code, "mult", pow(r, -1, p)), f"fourier({r})")
    gname = {"phase_i": "phase"}.get(name, name)
    param = params[0] if params else 1
    return transversal_gadget(code, gname, param)


def gadget_for(code: QuantumCode, gate: Gate) -> Gadget:
    """The gadget simulating ``gate`` on encoded blocks; ForeignGate if there is none."""
    if gate.name not in gate_set_for(code.p):
        raise ForeignGate(f"{gate.name} is outside the gate set for p = {code.p}")
    try:
        return _gadget_cached(code, gate.name, tuple(gate.params))
    except (NotTransversal, Unsupported) as exc:
        raise ForeignGate(f"{gate.name} has no gadget for {code.name()}: {exc}") from exc


# ------------------------------------------------------------- one level


def _wire_spans(locs: list[Location]) -> tuple[dict[int, int], dict[int, int]]:
    """Index of the first and last location touching each wire."""
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for i, loc in enumerate(locs):
        for q in loc.qupits:
            first.setdefault(q, i)
            last[q] = i
    return first, last


def _compile_once(circuit: Circuit, code: QuantumCode, ec: bool):
    p, m = code.p, code.m
    if circuit.p != p:
        raise ForeignGate(f"circuit is over p = {circuit.p}, code over p = {code.p}")
    for _, g in circuit.gates():
        gadget_for(code, g)
    ec_g = ec_gadget(code) if ec else None
    src_locs = locations(circuit)
    first, last = _wire_spans(src_locs)
    by_level: dict[int, list[int]] = {}
    for i, loc in enumerate(src_locs):
        by_level.setdefault(loc.t, []).append(i)

    b = CircuitBuilder(p, f"{circuit.name or 'circuit'}-sim")
    owner: dict[int, dict[int, int]] = {}  # period -> compiled wire -> source location
    blocks: dict[int, list[int]] = {}
    period_gadgets: list[list[str]] = []
    blocks_after: dict[int, dict[int, tuple[int, ...]]] = {}

    def claim(period: int, wires, loc_idx: int):
        slot = owner.setdefault(period, {})
        for w in wires:
            slot[w] = loc_idx

    def run(gadget: Gadget, wires: list[int], period: int, loc_idx: int) -> dict[int, int]:
        b.tag = (period, loc_idx)
        wmap = b.append_circuit(gadget.circuit, wires)
        period_gadgets[-1].append(gadget.implements)
        return wmap

    # leading period: encode every input string
    period_gadgets.append([])
    input_blocks = []
    enc = encode_gadget(code)
    for q in circuit.inputs:
        src = b.input_block(f"in{q}", m)
        input_blocks.append(tuple(src))
        loc_idx = first.get(q)
        tag_idx = -1 if loc_idx is None else loc_idx
        wmap = run(enc, src, ENCODE_PERIOD, tag_idx)
        blocks[q] = [wmap[w] for w in enc.out_blocks[0]]
        claim(ENCODE_PERIOD, src + blocks[q], tag_idx)
    b.barrier()

    for t in range(circuit.depth):
        period_gadgets.append([])
        idxs = by_level.get(t, [])
        for i in idxs:
            loc = src_locs[i]
            if loc.gate == "add":
                continue
            for q in loc.qupits:
                claim(t, blocks[q], i)
        if ec_g is not None:
            for i in idxs:
                loc = src_locs[i]
                if loc.gate == "add":
                    continue
                for q in loc.qupits:
                    wmap = run(ec_g, blocks[q], t, i)
                    blocks[q] = [wmap[w] for w in ec_g.out_blocks[0]]
                    claim(t, blocks[q], i)
        gates = {tuple(g.targets): g for g in circuit.levels[t]}
        for i in idxs:
            loc = src_locs[i]
            if loc.gate == "id":
                continue
            g = gates[loc.qupits]
            gad = gadget_for(code, g)
            if g.name == "add":
                fresh = b.fresh(m)
                b.tag = (t, i)
                b.materialize(fresh)
                wmap = run(gad, fresh, t, i)
                blocks[g.targets[0]] = [wmap[w] for w in gad.out_blocks[0]]
                claim(t, fresh + blocks[g.targets[0]], i)
                continue
            wires = [w for q in g.targets for w in blocks[q]]
            wmap = run(gad, wires, t, i)
            if g.name == "discard":
                del blocks[g.targets[0]]
                continue
            for q, out in zip(g.targets, gad.out_blocks):
                blocks[q] = [wmap[w] for w in out]
                claim(t, blocks[q], i)
        blocks_after[t] = {q: tuple(ws) for q, ws in blocks.items()}
        b.barrier()

    # trailing period: decode each output block into m digits
    period_gadgets.append([])
    dec = decode_gadget(code)
    final = circuit.depth
    output_blocks = []
    for q in circuit.outputs:
        loc_idx = last.get(q, -1)
        claim(final, blocks[q], loc_idx)
        wmap = run(dec, blocks[q], final, loc_idx)
        bits = [wmap[w] for w in dec.extra_outputs]
        junk = [wmap[w] for w in dec.out_blocks[0]]
        b.tag = (final, loc_idx)
        b.discard(junk)
        claim(final, junk, loc_idx)
        output_blocks.append(tuple(bits))
    b.tag = None
    outputs = [w for blk in output_blocks for w in blk]
    circ = b.build(outputs, {})
    tags = b.tags
    return circ, tags, owner, src_locs, input_blocks, output_blocks, period_gadgets, blocks_after


def _leaf_owners(circ: Circuit, tags, owner) -> tuple[list[Location], np.ndarray, list[tuple[int, int, int]]]:
    """Source-location index of every compiled location, plus the period ranges."""
    level_period = []
    for t, level in enumerate(circ.levels):
        level_period.append(tags[(t, level[0].targets)][0])
    created = {g.targets[0]: tags[(t, g.targets)][1] for t, g in circ.gates() if g.name == "add"}
    leaves = locations(circ)
    own = np.empty(len(leaves), dtype=np.int64)
    for j, loc in enumerate(leaves):
        if loc.gate != "id":
            own[j] = tags[(loc.t, loc.qupits)][1]
            continue
        w = loc.qupits[0]
        slot = owner.get(level_period[loc.t], {})
        own[j] = slot[w] if w in slot else created[w]
    periods = []
    for t, per in enumerate(level_period):
        if periods and periods[-1][0] == per:
            periods[-1][2] = t + 1
        else:
            periods.append([per, t, t + 1])
    return leaves, own, [tuple(x) for x in periods]


def _identity(circuit: Circuit) -> SimulatedCircuit:
    leaves = tuple(locations(circuit))
    return SimulatedCircuit(
        circuit, 0, None,
        [(q,) for q in circuit.inputs], [(q,) for q in circuit.outputs],
        [(t, t, t + 1) for t in range(circuit.depth)], [],
        RectangleTree(0, leaves, ()),
    )


def _lift(prev: SimulatedCircuit, code: QuantumCode, ec: bool) -> SimulatedCircuit:
    circ, tags, owner, src_locs, in_blocks, out_blocks, period_gadgets, blocks_after = _compile_once(prev.circuit, code, ec)
    leaves, own, periods = _leaf_owners(circ, tags, owner)
    m = code.m
    keep = own >= 0
    unattributed = int((~keep).sum())
    parents = (own[keep],) + prev.tree.parents
    tree = RectangleTree(prev.r + 1, tuple(loc for loc, k in zip(leaves, keep) if k), parents)
    # compiled inputs of prev input j: the m wires replacing each of its prev wires, in order
    pos_in = {q: i for i, q in enumerate(prev.circuit.inputs)}
    pos_out = {q: i for i, q in enumerate(prev.circuit.outputs)}
    new_in = [tuple(w for q in blk for w in in_blocks[pos_in[q]]) for blk in prev.input_blocks]
    new_out = [tuple(w for q in blk for w in out_blocks[pos_out[q]]) for blk in prev.output_blocks]
    assert all(len(blk) == m ** (prev.r + 1) for blk in new_in + new_out)
    return SimulatedCircuit(circ, prev.r + 1, code, new_in, new_out, periods, period_gadgets, tree, unattributed,
                            blocks_after, ec)


def simulate_level(circuit: Circuit, code: QuantumCode, ec: bool = True) -> SimulatedCircuit:
    """One application of the simulation map."""
    return _lift(_identity(circuit), code, ec)


def estimated_locations(circuit: Circuit, code: QuantumCode, ec: bool = True) -> int:
    """Lower estimate of the location count after one more level (gadget and EC
    locations summed over source locations; waiting time is not counted)."""
    ec_size = len(locations(ec_gadget(code).circuit)) if ec else 0
    total = 0
    for t, level in enumerate(circuit.levels):
        for g in level:
            if g.name != "add":
                total += ec_size * g.arity
            total += len(locations(gadget_for(code, g).circuit))
    live = sum(len(s) for s in circuit.live_wires())
    busy = sum(g.arity for _, g in circuit.gates())
    total += (live - busy) * ec_size
    io = len(locations(encode_gadget(code).circuit)) + len(locations(decode_gadget(code).circuit))
    return total + io * max(len(circuit.inputs), len(circuit.outputs))


def simulate_r(circuit: Circuit, code: QuantumCode, r: int, ec: bool = True, cap: int = SIZE_CAP) -> SimulatedCircuit:
    """r-fold simulation with the full rectangle tree; r = 0 returns the input."""
    if r < 0:
        raise ValueError("r must be non-negative")
    sim = _identity(circuit)
    for _ in range(r):
        if estimated_locations(sim.circuit, code, ec) > cap:
            raise TooLarge(f"level {sim.r + 1} would exceed {cap} locations")
        sim = _lift(sim, code, ec)
        if len(sim.tree.leaves) > cap:
            raise TooLarge(f"level {sim.r} has {len(sim.tree.leaves)} locations (cap {cap})")
    return sim


def rectangle_tree(sim: SimulatedCircuit) -> RectangleTree:
    """The nested rectangle partition, with the refinement property checked."""
    tree = sim.tree
    if not tree.is_refinement():
        raise AssertionError("rectangle partition is not a refinement")
    return tree


# ------------------------------------------------------------ decoding


def _plurality(groups: np.ndarray) -> np.ndarray:
    """Most frequent value along the last axis, smallest value on ties."""
    top = groups.max() + 1 if groups.size else 1
    counts = np.stack([(groups == v).sum(axis=-1) for v in range(top)], axis=-1)
    return counts.argmax(axis=-1)


def recursive_majority(digits, m: int, r: int) -> int:
    """r-fold nested plurality over consecutive groups of m digits."""
    arr = np.asarray(digits, dtype=np.int64).ravel()
    if len(arr) != m**r:
        raise LengthMismatch(f"expected {m ** r} digits, got {len(arr)}")
    for _ in range(r):
        arr = _plurality(arr.reshape(-1, m))
    return int(arr[0])


def decode_outputs(sim: SimulatedCircuit, row) -> tuple[int, ...]:
    """Recursive-majority decoding of one compiled output string (ordered as
    the compiled circuit's outputs) back to the original outputs."""
    col = {w: i for i, w in enumerate(sim.circuit.outputs)}
    m = len(sim.output_blocks[0]) ** (1 / sim.r) if sim.r else 1
    m = int(round(m))
    return tuple(recursive_majority([row[col[w]] for w in blk], m, sim.r) for blk in sim.output_blocks)


def compiled_input(sim: SimulatedCircuit, digits) -> dict[int, int]:
    """Wire assignment of the compiled circuit for an original basis input."""
    out = {}
    for d, blk in zip(digits, sim.input_blocks):
        for w in blk:
            out[w] = int(d)
    return out


# ------------------------------------------------- sparse-deviation check


@dataclass
class LemmaReport:
    periods: int
    paths: int
    violations: list[tuple] = field(default_factory=list)
    max_residual: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _pauli_labels(p: int, n: int):
    """All nontrivial n-qupit Pauli labels as tuples of (c, c')."""
    single = [(c, c2) for c in range(p) for c2 in range(p)]
    for combo in itertools.product(single, repeat=n):
        if any(x != (0, 0) for x in combo):
            yield combo


def lemma_check(sim: SimulatedCircuit, k: int = 1, d: int = 1, max_faults_per_rectangle: int | None = None,
                limit: int | None = None) -> LemmaReport:
    """Frame check of the one-level deviation lemma over every working period.

    Error correction is taken as ideal at each period start: incoming
    residuals of weight at most d are cleared, so each period starts clean.
    Every fault set with at most ``max_faults_per_rectangle`` (default k)
    faulty locations in each rectangle of the period, under every joint
    Pauli assignment, is pushed through the period's gates; the residual on
    every block must then have weight at most d.
    """
    if sim.r != 1:
        raise ValueError("the check runs on one level of simulation")
    if sim.ec:
        raise ValueError("compile with ec=False: correction is modelled as ideal at period starts")
    per_rect = k if max_faults_per_rectangle is None else max_faults_per_rectangle
    circ = sim.circuit
    p = circ.p
    tree = sim.tree
    leaves = tree.leaves
    owner = tree.parents[0]
    leaf_index = {loc: i for i, loc in enumerate(leaves)}
    report = LemmaReport(0, 0)
    for period, start, stop in sim.periods:
        if period not in sim.blocks_after:
            continue  # encode and decode stages are outside the working periods
        report.periods += 1
        rects: dict[int, list[Location]] = {}
        for loc in leaves:
            if start <= loc.t < stop and loc.gate != "discard":
                rects.setdefault(int(owner[leaf_index[loc]]), []).append(loc)
        choices = []
        for rid in sorted(rects):
            opts = [()]
            for size in range(1, per_rect + 1):
                for locs in itertools.combinations(rects[rid], size):
                    for labels in itertools.product(*(list(_pauli_labels(p, len(l.qupits))) for l in locs)):
                        opts.append(tuple(zip(locs, labels)))
            choices.append(opts)
        blocks = list(sim.blocks_after[period].values())
        gates = [(t, circ.levels[t]) for t in range(start, stop)]
        for combo in itertools.product(*choices):
            faults = [f for part in combo for f in part]
            if not faults:
                continue
            report.paths += 1
            by_t: dict[int, list] = {}
            for loc, labels in faults:
                by_t.setdefault(loc.t, []).append((loc, labels))
            frame = PauliFrame(p)
            for t, level in gates:
                for g in level:
                    frame.apply(g)
                for loc, labels in by_t.get(t, []):
                    for q, (c, c2) in zip(loc.qupits, labels):
                        frame.inject(q, c, c2)
            worst = max(len(frame.support(blk)) for blk in blocks)
            report.max_residual = max(report.max_residual, worst)
            if worst > d:
                report.violations.append((period, tuple((l.t, l.qupits, lab) for l, lab in faults), worst))
                if limit is not None and len(report.violations) >= limit:
                    return report
    return report
