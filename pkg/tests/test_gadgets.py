import itertools

import numpy as np
import pytest

from artifact.errors import BadDegree, NotTransversal, Unsupported
from artifact.gadgets.circuit import Circuit, CircuitBuilder
from artifact.gadgets.gates import GATE_KINDS, Gate, gate_matrix, gate_set_for, inverse_gates
from artifact.gadgets.library import (
    Gadget, cat_prep_verify, decode_gadget, degree_reduction_gadget, ec_gadget, encode_gadget, fourier_gadget,
    majority_circuit, phase_mix_circuit, toffoli_gadget_poly, transversal_gadget,
)
from artifact.gadgets.sim import run_circuit
from artifact.gadgets.spread import measure_spread
from artifact.gadgets.verify import verify_gadget
from artifact.layout1d import routed_gadget
from artifact.quantum_codes import codeword, codeword_rows, make_poly_code
from artifact.state_sim import SparseState, is_unitary

STEANE_TRANSVERSAL = ["not", "cnot", "phase", "cphase", "h", "swap"]
POLY_TRANSVERSAL = [("gnot", 1), ("gnot", 3), ("gcnot", 1), ("swap", 1), ("mult", 2), ("gphase", 1), ("fourier", 1)]


def _all_gadgets(steane, poly5, poly11):
    gs = [transversal_gadget(steane, g) for g in STEANE_TRANSVERSAL]
    gs += [ec_gadget(steane), encode_gadget(steane), decode_gadget(steane)]
    gs += [transversal_gadget(poly5, g, c) for g, c in POLY_TRANSVERSAL]
    gs += [fourier_gadget(poly5), degree_reduction_gadget(poly5), degree_reduction_gadget(poly5, True),
           toffoli_gadget_poly(poly5), encode_gadget(poly5), decode_gadget(poly5), ec_gadget(poly11)]
    return gs


def _embedded(p, gate, n):
    """Matrix of ``gate`` on qupits 0..n-1 (targets must be 0..arity-1 or a single qupit)."""
    u = gate_matrix(p, gate)
    if gate.arity == n:
        return u
    (q,) = gate.targets
    out = np.ones((1, 1))
    for i in range(n):
        out = np.kron(out, u if i == q else np.eye(p))
    return out


@pytest.mark.parametrize("p", [2, 3])
def test_gate_payloads_are_unitary_and_inverses_undo(p):
    for name in sorted(gate_set_for(p) - {"add", "discard"}):
        arity = GATE_KINDS[name][0]
        params = (2 % p or 1,) if name in ("mult", "gphase", "fourier", "gnot") else ()
        g = Gate(name, tuple(range(arity)), params)
        u = gate_matrix(p, g)
        assert is_unitary(u)
        inv = np.eye(p**arity)
        for h in inverse_gates(p, g):
            inv = _embedded(p, h, arity) @ inv
        assert np.allclose(inv @ u, np.eye(p**arity), atol=1e-12), name


def test_every_gadget_stays_in_its_gate_set_and_round_trips(steane, poly5, poly11):
    for g in _all_gadgets(steane, poly5, poly11):
        assert g.circuit.in_gate_set(), g.implements
        text = g.circuit.to_text()
        again = Circuit.from_text(text)
        assert again.to_text() == text
        assert again.levels == g.circuit.levels


def test_text_format_lines():
    b = CircuitBuilder(2, "demo")
    w = b.input_block("in", 2)
    b.gate("cnot", [w[1], w[0]])
    b.gate("h", [w[1]])
    text = b.build(w).to_text()
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    assert body == ["0 cnot - 1,0", "1 h - 1"]


@pytest.mark.parametrize("gate", STEANE_TRANSVERSAL)
def test_steane_transversal_gadgets(steane, gate):
    rep = verify_gadget(transversal_gadget(steane, gate))
    assert rep.ok and rep.cases >= 5, rep.failures


@pytest.mark.parametrize("gate,param", POLY_TRANSVERSAL)
def test_poly_transversal_gadgets(poly5, gate, param):
    rep = verify_gadget(transversal_gadget(poly5, gate, param))
    assert rep.ok, rep.failures


def test_non_transversal_requests_are_refused(steane, poly5):
    with pytest.raises(NotTransversal):
        transversal_gadget(steane, "gnot")
    with pytest.raises(NotTransversal):
        transversal_gadget(poly5, "mult", 5)
    with pytest.raises(Unsupported):
        ec_gadget(poly5)
    with pytest.raises(BadDegree):
        fourier_gadget(steane)


@pytest.mark.parametrize("maker", [fourier_gadget, degree_reduction_gadget, encode_gadget, decode_gadget])
def test_poly_composite_gadgets(poly5, maker):
    assert verify_gadget(maker(poly5)).ok


def test_degree_reduction_into_existing_block(poly5):
    assert verify_gadget(degree_reduction_gadget(poly5, target_input=True), superpositions=2).ok


@pytest.mark.parametrize("maker", [ec_gadget, encode_gadget, decode_gadget])
def test_steane_composite_gadgets(steane, maker):
    assert verify_gadget(maker(steane)).ok


def test_poly_toffoli_on_sample_triples(poly5):
    rep = verify_gadget(toffoli_gadget_poly(poly5), superpositions=0, inputs=[0, 31, 62, 93, 124])
    assert rep.ok


def test_broken_gadget_is_caught(steane):
    good = transversal_gadget(steane, "not")
    levels = [list(level) for level in good.circuit.levels]
    levels[0] = levels[0][1:]
    c = good.circuit
    bad = Gadget(Circuit(c.p, c.n_wires, levels, c.inputs, c.outputs), steane, "not", good.in_blocks, good.out_blocks)
    rep = verify_gadget(bad)
    assert not rep.ok and rep.failures


def _without_discards(circ: Circuit) -> Circuit:
    levels = [[g for g in level if g.name != "discard"] for level in circ.levels]
    live = set(circ.inputs) | {g.targets[0] for _, g in circ.gates() if g.name == "add"}
    junk = sorted(live - set(circ.outputs))
    return Circuit(circ.p, circ.n_wires, levels, circ.inputs, tuple(circ.outputs) + tuple(junk)), len(junk)


def _junk_states(gadget, expected_out):
    """Per logical input a: junk register after projecting the outputs onto the
    expected codewords (``expected_out(a)`` lists one value per output block)."""
    circ, n_junk = _without_discards(gadget.circuit)
    n_out = len(gadget.circuit.outputs)
    out = {}
    for a in range(gadget.in_codes[0].logical_dim):
        (branch,) = run_circuit(circ, codeword(gadget.in_codes[0], a)).branches
        target = {(): 1.0}
        for code, v in zip(gadget.out_codes, expected_out(a)):
            rows = codeword_rows(code, v).tolist()
            target = {k + tuple(r): amp / np.sqrt(len(rows)) for k, amp in target.items() for r in rows}
        junk: dict[tuple, complex] = {}
        for row, amp in zip(branch.digits.tolist(), branch.amps):
            t = target.get(tuple(row[:n_out]))
            if t:
                key = tuple(row[n_out:])
                junk[key] = junk.get(key, 0) + t * amp
        out[a] = junk
    return out, n_junk


# Without its discards the Steane EC register is far too wide to hold; its
# ancilla independence follows from the pure-output superposition checks above.
@pytest.mark.parametrize("which", ["degree-reduction", "mult"])
def test_discarded_ancillas_are_pure_and_input_independent(which, poly5):
    if which == "degree-reduction":
        g, f = degree_reduction_gadget(poly5), lambda a: [a, a]
    else:
        g, f = transversal_gadget(poly5, "mult", 2), lambda a: [2 * a % 5]
    junk, n = _junk_states(g, f)
    if which == "degree-reduction":
        assert n > 0
    norms = {a: np.sqrt(sum(abs(v) ** 2 for v in j.values())) for a, j in junk.items()}
    assert all(abs(v - 1) < 1e-10 for v in norms.values())
    ref = junk[0]
    for j in junk.values():
        overlap = sum(np.conj(ref.get(k, 0)) * v for k, v in j.items())
        assert abs(abs(overlap) - 1) < 1e-9


def test_cat_preparation_with_checks():
    circ = cat_prep_verify(4, 3)
    final = run_circuit(circ, SparseState.basis(2, []))
    (branch,) = final.branches
    rows = {tuple(r) for r in branch.digits.tolist()}
    assert rows == {(0, 0, 0, 0, 1, 1, 1), (1, 1, 1, 1, 1, 1, 1)}
    assert np.allclose(np.abs(branch.amps), 2**-0.5)


def test_majority_truth_table():
    circ = majority_circuit()
    for bits in itertools.product(range(2), repeat=4):
        (branch,) = run_circuit(circ, SparseState.basis(2, bits)).branches
        a, b, c, d = bits
        assert branch.digits.tolist() == [[a, b, c, d ^ int(a + b + c >= 2)]]


def test_phase_mix_on_width_three_stand_in():
    m, fn = 3, [1, 0, 1]
    circ = phase_mix_circuit(m, fn)
    rng = np.random.default_rng(5)
    for _ in range(40):
        bits = rng.integers(0, 2, m * m + 3 * m)
        (branch,) = run_circuit(circ, SparseState.basis(2, bits)).branches
        assert branch.digits.tolist() == [bits.tolist()]
        cats = bits[: m * m].reshape(m, m)
        B, C, D = bits[m * m:].reshape(3, m)
        sign = 1
        for i in range(m):
            a = int(np.dot(cats[i], fn) % 2)
            sign *= (-1) ** (a * (B[i] * C[i] + D[i]))
        assert branch.amps[0] == pytest.approx(sign)


@pytest.mark.parametrize("gate", ["cnot", "h", "not"])
def test_transversal_spread_is_one(steane, gate):
    g = transversal_gadget(steane, gate)
    assert measure_spread(g).l == 1 <= g.declared_spread


def test_poly_transversal_spread_is_one(poly5):
    for gate, c in [("gcnot", 1), ("fourier", 1)]:
        assert measure_spread(transversal_gadget(poly5, gate, c)).l == 1


def test_routed_cnot_spread_at_most_doubled(steane):
    g = transversal_gadget(steane, "cnot")
    plain = measure_spread(g).l
    routed, _ = routed_gadget(g)
    assert measure_spread(routed).l <= 2 * plain


def test_spread_with_bell_inputs_matches(steane):
    g = transversal_gadget(steane, "h")
    assert measure_spread(g, preceding_ec=False).l == 1


def test_spread_parallel_matches_serial(steane):
    g = transversal_gadget(steane, "cnot")
    a = measure_spread(g, chunk_labels=50)
    b = measure_spread(g, chunk_labels=50, jobs=2)
    assert a.per_fault == b.per_fault and a.per_location == b.per_location


def _random_mixed_circuit(p, rng):
    b = CircuitBuilder(p, "labels")
    ws = b.input_block("in", 3)
    live = list(ws)
    for _ in range(14):
        r = rng.random()
        if r < 0.15 and len(live) > 2:
            w = live.pop(int(rng.integers(len(live))))
            b.discard([w])
        elif r < 0.3:
            live.append(b.fresh1())
            b.gate("h" if p == 2 else "fourier", [live[-1]], () if p == 2 else (1,))
        elif r < 0.45:
            b.gate("h" if p == 2 else "fourier", [live[int(rng.integers(len(live)))]], () if p == 2 else (1,))
        else:
            a, c = rng.choice(len(live), 2, replace=False)
            b.gate("cnot" if p == 2 else "gcnot", [live[a], live[c]])
    return b.build(live)


@pytest.mark.parametrize("p", [2, 3])
def test_batched_fault_labels_match_separate_runs(p):
    from artifact.gadgets.sim import BranchSim
    from artifact.state_sim import MixedState

    rng = np.random.default_rng(40 + p)
    for _ in range(12):
        circ = _random_mixed_circuit(p, rng)
        state = SparseState.basis(p, [0] * len(circ.inputs))
        faults, label = {}, 1
        for t in range(circ.depth):
            for w in circ.live_wires()[t]:
                if any(g.name == "discard" and w in g.targets for g in circ.levels[t]):
                    continue
                for c, c2 in [(1, 0), (0, 1), (1, 1)]:
                    faults.setdefault(t, []).append((w, c, c2, label))
                    label += 1
        batched = BranchSim.from_state(state, circ.inputs).run(circ, faults=faults).ensembles(circ.outputs)
        n_out = len(circ.outputs)
        for t, fs in faults.items():
            for f in fs:
                single = BranchSim.from_state(state, circ.inputs).run(circ, faults={t: [f[:3] + (1,)]})
                want = single.ensembles(circ.outputs)[1].reduced(range(n_out)).matrix
                got = batched[f[3]].reduced(range(n_out)).matrix
                assert np.allclose(got, want, atol=1e-10)
