"""Nearest-neighbour routing on a line with SWAP chains and RESTART recycling.

Every wire of the source circuit is given a slot; a wire added after another
was discarded reuses the freed slot through a single RESTART, so the number
of occupied line positions never changes during the computation. A gate on
distant positions is preceded by SWAPs that bring its operands next to an
anchor operand and followed by the reverse SWAPs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArityTooHigh, BadParams, TooLarge
from .gadgets.circuit import Circuit, CircuitBuilder
from .gadgets.gates import Gate, ROUTING_EXTRAS, gate_set_for
from .gadgets.library import Gadget
from .gadgets.sim import run_circuit
from .state_sim import SparseState, trace_distance

DENSE_LIMIT = 12
EQUIV_TOL = 1e-9


@dataclass(frozen=True)
class LinearLayout:
    """``order[pos]`` is the slot at line position ``pos``; slots 0..n_in-1 hold
    the circuit inputs and later slots are pre-allocated ancillas."""

    order: tuple[int, ...]
    ancilla_slots: int = 0

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise BadParams("layout must be a permutation of 0..N-1")

    @property
    def size(self) -> int:
        return len(self.order)

    def position(self) -> dict[int, int]:
        return {slot: pos for pos, slot in enumerate(self.order)}

    @classmethod
    def identity(cls, n: int, ancillas: int = 0) -> "LinearLayout":
        return cls(tuple(range(n)), ancillas)


@dataclass
class RoutedCircuit:
    circuit: Circuit
    layout: LinearLayout
    # source wire -> line position at the end (for outputs)
    final_position: dict[int, int]
    swaps: int
    restarts: int
    swaps_per_gate: list[tuple[Gate, int, int]]  # (gate, span, swaps)


def assign_slots(circuit: Circuit) -> tuple[dict[int, int], int, list[tuple[int, int]]]:
    """Give every wire a slot; an added wire takes the lowest slot freed by a
    discard (needing a RESTART) or else a fresh ancilla slot.

    Returns (wire -> slot, slot count, [(level, slot)] restart points).
    """
    slot = {w: i for i, w in enumerate(circuit.inputs)}
    n_slots = len(circuit.inputs)
    freed: list[int] = []
    restarts = []
    for t, level in enumerate(circuit.levels):
        # adds first so a slot discarded in this same level is not reused early
        for g in level:
            if g.name == "add":
                w = g.targets[0]
                if freed:
                    freed.sort()
                    slot[w] = freed.pop(0)
                    restarts.append((t, slot[w]))
                else:
                    slot[w] = n_slots
                    n_slots += 1
        for g in level:
            if g.name == "discard":
                freed.append(slot[g.targets[0]])
    return slot, n_slots, restarts


def _gather_plan(positions: list[int]) -> list[tuple[int, int]]:
    """SWAPs (as (pos, pos+1) pairs) that make the operand positions contiguous.

    The anchor is the lower median operand; operands below it move up and
    operands above it move down, farthest-first from each side, so a span of
    two resolves by moving the higher operand toward the lower one.
    """
    order = sorted(positions)
    anchor = order[(len(order) - 1) // 2]
    a_idx = order.index(anchor)
    swaps = []
    # operands above the anchor: the nearest one goes to anchor+1, the next to anchor+2, ...
    for j, pos in enumerate(order[a_idx + 1:], start=1):
        target = anchor + j
        for x in range(pos - 1, target - 1, -1):
            swaps.append((x, x + 1))
    for j, pos in enumerate(reversed(order[:a_idx]), start=1):
        target = anchor - j
        for x in range(pos, target):
            swaps.append((x, x + 1))
    return swaps


def route_1d(circuit: Circuit, layout: LinearLayout | None = None, drop_return: bool = False) -> RoutedCircuit:
    """Route every gate onto adjacent positions; add/discard become RESTART.

    ``drop_return`` omits the last return SWAP of the first routed gate
    (a deliberately broken circuit for negative tests).
    """
    for _, g in circuit.gates():
        if g.arity > 3:
            raise ArityTooHigh(f"{g} acts on {g.arity} qupits")
    slot, n_slots, restart_points = assign_slots(circuit)
    layout = layout or LinearLayout.identity(n_slots, n_slots - len(circuit.inputs))
    if layout.size != n_slots:
        raise BadParams(f"layout has {layout.size} positions, circuit needs {n_slots}")
    pos_of_slot = layout.position()
    line = list(layout.order)  # line[pos] = slot
    where = dict(pos_of_slot)  # slot -> pos

    b = CircuitBuilder(circuit.p, f"{circuit.name or 'circuit'}-1d")
    n_in = len(circuit.inputs)
    # line positions are the builder's wires: inputs take their positions first
    wires = {}
    ins = b.input_block("line-in", n_in)
    for s, w in zip(range(n_in), ins):
        wires[pos_of_slot[s]] = w
    for pos in range(n_slots):
        if pos not in wires:
            (wires[pos],) = b.fresh(1)
    b.materialize(wires[pos] for pos in range(n_slots))
    # builder wire ids -> position: relabel at the end
    restart_at = {}
    for t, s in restart_points:
        restart_at.setdefault(t, []).append(s)

    total_swaps = 0
    per_gate = []
    broken = drop_return
    for t, level in enumerate(circuit.levels):
        for s in restart_at.get(t, []):
            b.gate("restart", [wires[where[s]]])
        for g in level:
            if g.name in ("add", "discard"):
                continue
            ps = [where[slot[w]] for w in g.targets]
            span = max(ps) - min(ps) if len(ps) > 1 else 0
            plan = _gather_plan(ps) if len(ps) > 1 else []
            for a, c in plan:
                b.gate("swap", [wires[a], wires[c]])
                line[a], line[c] = line[c], line[a]
                where[line[a]], where[line[c]] = a, c
            b.gate(g.name, [wires[where[slot[w]]] for w in g.targets], g.params)
            back = list(reversed(plan))
            skip = len(back) - 1 if broken and back else None
            broken = broken and skip is None
            for j, (a, c) in enumerate(back):
                # the bookkeeping still assumes the skipped SWAP ran
                if j != skip:
                    b.gate("swap", [wires[a], wires[c]])
                line[a], line[c] = line[c], line[a]
                where[line[a]], where[line[c]] = a, c
            n_sw = len(plan) + len(back) - (skip is not None)
            total_swaps += n_sw
            per_gate.append((g, span, n_sw))
    final = {w: where[slot[w]] for w in circuit.outputs}
    outputs = [wires[final[w]] for w in circuit.outputs]
    b.discard(wires[pos] for pos in range(n_slots) if wires[pos] not in set(outputs))
    built = b.build(outputs, {"line-in": ins, "line-out": outputs})
    # relabel builder wires to line positions
    inv = {w: pos for pos, w in wires.items()}
    routed = built.relabeled(inv, n_slots)
    return RoutedCircuit(routed, layout, final, total_swaps, len(restart_points), per_gate)


def is_nearest_neighbor(circuit: Circuit) -> bool:
    """Every multi-qupit gate acts on consecutive positions."""
    for _, g in circuit.gates():
        if g.arity > 1:
            ps = sorted(g.targets)
            if ps[-1] - ps[0] != g.arity - 1:
                return False
    return True


def gate_set_preserved(original: Circuit, routed: Circuit) -> bool:
    allowed = set(gate_set_for(original.p)) | set(ROUTING_EXTRAS) | {"swap"}
    return routed.uses_only(allowed)


def _random_state(p: int, n: int, rng: np.random.Generator) -> SparseState:
    dim = p**n
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    digits = np.array(np.unravel_index(np.arange(dim), (p,) * n)).T.reshape(dim, n)
    return SparseState.from_arrays(p, n, digits, v)


def verify_equivalence(original: Circuit, routed, trials: int = 50, seed: int = 0) -> bool:
    """Dense comparison of output states on random inputs."""
    rc = routed.circuit if isinstance(routed, RoutedCircuit) else routed
    if rc.n_wires > DENSE_LIMIT or original.n_wires > DENSE_LIMIT:
        raise TooLarge(f"dense verification is limited to {DENSE_LIMIT} qupits")
    if len(rc.inputs) != len(original.inputs) or len(rc.outputs) != len(original.outputs):
        return False
    rng = np.random.default_rng(seed)
    n_out = len(original.outputs)
    for _ in range(trials):
        state = _random_state(original.p, len(original.inputs), rng)
        a = run_circuit(original, state).reduced(range(n_out))
        b = run_circuit(rc, state).reduced(range(n_out))
        if trace_distance(a, b) > EQUIV_TOL:
            return False
    return True


def routed_gadget(gadget: Gadget, layout: LinearLayout | None = None) -> tuple[Gadget, RoutedCircuit]:
    rc = route_1d(gadget.circuit, layout)
    circ = rc.circuit
    in_map = dict(zip(gadget.circuit.inputs, circ.inputs))
    in_blocks = [tuple(in_map[w] for w in blk) for blk in gadget.in_blocks]
    out_blocks = [tuple(rc.final_position[w] for w in blk) for blk in gadget.out_blocks]
    extra = tuple(rc.final_position[w] for w in gadget.extra_outputs)
    g = Gadget(circ, gadget.code, f"{gadget.implements}-1d", in_blocks, out_blocks,
               list(gadget.out_codes), extra, 2 * gadget.declared_spread)
    if hasattr(gadget, "in_codes"):
        g.in_codes = gadget.in_codes
    return g, rc


def routed_spread_factor(gadget: Gadget, layout: LinearLayout | None = None, preceding_ec: bool = True) -> float:
    """Routed spread over unrouted spread (1.0 when the gadget has spread 0)."""
    from .gadgets.spread import measure_spread

    plain = measure_spread(gadget, preceding_ec).l
    routed, _ = routed_gadget(gadget, layout)
    lr = measure_spread(routed, preceding_ec).l
    factor = lr / plain if plain else (1.0 if lr == 0 else float("inf"))
    if factor > 2:
        raise AssertionError(f"routing raised the spread from {plain} to {lr}")
    return factor
