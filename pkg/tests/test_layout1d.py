import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.cli import parse_program
from artifact.errors import ArityTooHigh, BadParams, TooLarge
from artifact.fault_model import PauliFrame
from artifact.gadgets.circuit import CircuitBuilder
from artifact.gadgets.gates import Gate
from artifact.gadgets.library import transversal_gadget
from artifact.gadgets.spread import measure_spread
from artifact.quantum_codes import steane_code
from artifact.layout1d import (
    LinearLayout, assign_slots, gate_set_preserved, is_nearest_neighbor, route_1d, routed_gadget,
    routed_spread_factor, verify_equivalence,
)


def test_adjacent_gate_needs_no_swaps():
    rc = route_1d(parse_program("cnot 0 1", 2, 2))
    assert rc.swaps == 0
    assert verify_equivalence(parse_program("cnot 0 1", 2, 2), rc)


def test_distance_three_cnot():
    prog = parse_program("cnot 0 3", 2, 4)
    rc = route_1d(prog)
    assert rc.swaps == 4
    assert rc.swaps_per_gate[0][1:] == (3, 4)
    assert is_nearest_neighbor(rc.circuit)
    assert verify_equivalence(prog, rc)


def test_identity_circuit_equivalent():
    prog = parse_program("", 2, 3)
    assert verify_equivalence(prog, route_1d(prog))


def _random_circuit(p, n, depth, rng):
    b = CircuitBuilder(p, "random")
    ws = b.input_block("in", n)
    names = [("cnot", 2), ("h", 1), ("toffoli", 3), ("not", 1), ("phase_i", 1), ("swap", 2)]
    for _ in range(depth):
        name, arity = names[rng.integers(len(names))]
        b.gate(name, [ws[int(i)] for i in rng.choice(n, arity, replace=False)])
    return b.build(ws)


def test_random_clifford_toffoli_circuits_equivalent():
    rng = np.random.default_rng(31)
    for _ in range(10):
        prog = _random_circuit(2, 4, 6, rng)
        rc = route_1d(prog)
        assert is_nearest_neighbor(rc.circuit)
        assert gate_set_preserved(prog, rc.circuit)
        assert verify_equivalence(prog, rc, trials=20)


def test_swap_budget_per_gate():
    rng = np.random.default_rng(8)
    prog = _random_circuit(2, 6, 20, rng)
    for gate, span, swaps in route_1d(prog).swaps_per_gate:
        assert swaps <= 2 * gate.arity * span


def test_dropped_return_swap_detected():
    prog = parse_program("cnot 0 3; h 1", 2, 4)
    assert not verify_equivalence(prog, route_1d(prog, drop_return=True))


def test_custom_layout():
    prog = parse_program("cnot 0 1", 2, 3)
    layout = LinearLayout((0, 2, 1))
    rc = route_1d(prog, layout)
    assert rc.swaps == 2
    assert verify_equivalence(prog, rc)
    with pytest.raises(BadParams):
        LinearLayout((0, 0, 1))
    with pytest.raises(BadParams):
        route_1d(prog, LinearLayout((0, 1)))


def test_discard_then_add_becomes_one_restart():
    b = CircuitBuilder(2, "recycle")
    ws = b.input_block("in", 2)
    b.gate("cnot", ws)
    b.discard([ws[1]])
    b.gate("h", [ws[0]])
    b.gate("h", [ws[0]])
    (fresh,) = b.fresh(1)
    b.gate("cnot", [ws[0], fresh])
    circ = b.build([ws[0], fresh])
    slot, n_slots, restarts = assign_slots(circ)
    assert n_slots == 2 and slot[fresh] == slot[ws[1]] and len(restarts) == 1
    rc = route_1d(circ)
    assert rc.restarts == 1
    assert sum(g.name == "restart" for _, g in rc.circuit.gates()) == 1
    assert rc.circuit.n_wires == 2


def test_arity_too_high():
    b = CircuitBuilder(2, "wide")
    ws = b.input_block("in", 4)
    b.gate("toffoli", ws[:3])
    circ = b.build(ws)
    circ.levels[0].append(Gate("cccnot", tuple(ws)))
    with pytest.raises(ArityTooHigh):
        route_1d(circ)


def test_dense_verification_limit():
    prog = parse_program("cnot 0 12", 2, 13)
    with pytest.raises(TooLarge):
        verify_equivalence(prog, route_1d(prog))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 1), st.integers(0, 2), st.integers(0, 2))
def test_fault_free_swap_keeps_support(p, wire, c, c2):
    frame = PauliFrame(p, [0, 1])
    frame.inject(wire, c, c2)
    before = len(frame.support([0, 1]))
    frame.apply(Gate("swap", (0, 1)))
    assert len(frame.support([0, 1])) == before
    # the error stays on the same logical qupit, now at the other site
    if before:
        assert frame.support([0, 1]) == (1 - wire,)


def test_routed_transversal_cnot_spread(steane):
    g = transversal_gadget(steane, "cnot")
    assert measure_spread(routed_gadget(g)[0], preceding_ec=True).l <= 2
    assert routed_spread_factor(g, preceding_ec=True) <= 2


def test_faulty_swap_confined_per_block(steane):
    g, rc = routed_gadget(transversal_gadget(steane, "cnot"))
    res = measure_spread(g, preceding_ec=True)
    swap_at = {(t, gate.targets) for t, gate in rc.circuit.gates() if gate.name == "swap"}
    hits = [v for key, v in res.per_location.items() if key in swap_at]
    assert hits and all(max(v) <= 2 for v in hits)


def test_no_distant_gates_factor_one():
    g = transversal_gadget(steane_code(), "h")
    assert routed_spread_factor(g, preceding_ec=True) == 1.0
