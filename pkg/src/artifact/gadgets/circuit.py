"""Leveled circuits, an ASAP-leveling builder, and the text format.

Text format: header lines start with ``#``; then one gate per line as
``t name params targets`` with levels separated by blank lines and gates
inside a level ordered by their target tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import BadParams, BadTargets
from .gates import GATE_KINDS, Gate, gate_set_for, inverse_gates


@dataclass
class Circuit:
    p: int
    n_wires: int
    levels: list[list[Gate]]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    blocks: dict[str, tuple[int, ...]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.levels = [sorted(level, key=lambda g: (g.targets, g.name, g.params)) for level in self.levels]
        self.validate()

    @property
    def depth(self) -> int:
        return len(self.levels)

    def gates(self) -> Iterable[tuple[int, Gate]]:
        for t, level in enumerate(self.levels):
            for g in level:
                yield t, g

    def gate_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def gate_names(self) -> set[str]:
        return {g.name for _, g in self.gates()}

    def uses_only(self, allowed: Iterable[str]) -> bool:
        return self.gate_names() <= set(allowed)

    def in_gate_set(self) -> bool:
        return self.uses_only(gate_set_for(self.p))

    def validate(self):
        live = set(self.inputs)
        if len(live) != len(self.inputs):
            raise BadTargets("repeated input wire")
        for t, level in enumerate(self.levels):
            seen: set[int] = set()
            for g in level:
                if g.name not in GATE_KINDS:
                    raise BadParams(f"unknown gate {g.name}")
                if GATE_KINDS[g.name][0] != g.arity or len(set(g.targets)) != g.arity:
                    raise BadTargets(f"bad targets for {g}")
                if seen & set(g.targets):
                    raise BadTargets(f"wire reused within level {t}: {g}")
                seen |= set(g.targets)
                (w0,) = g.targets[:1] or (None,)
                if g.name == "add":
                    if w0 in live:
                        raise BadTargets(f"add on live wire {w0} at level {t}")
                    live.add(w0)
                elif g.name == "discard":
                    if w0 not in live:
                        raise BadTargets(f"discard on dead wire {w0} at level {t}")
                    live.discard(w0)
                else:
                    if not set(g.targets) <= live:
                        raise BadTargets(f"gate on dead wire at level {t}: {g}")
        if live != set(self.outputs):
            raise BadTargets(f"live wires at the end {sorted(live)} differ from outputs {sorted(self.outputs)}")

    def live_wires(self) -> list[set[int]]:
        """Wires alive during each level (a wire is alive at its add and discard levels)."""
        out = []
        live = set(self.inputs)
        for level in self.levels:
            now = set(live)
            for g in level:
                if g.name == "add":
                    now.add(g.targets[0])
                    live.add(g.targets[0])
                elif g.name == "discard":
                    live.discard(g.targets[0])
            out.append(now)
        return out

    def to_text(self) -> str:
        lines = [
            f"# p {self.p} wires {self.n_wires} name {self.name or '-'}",
            "# inputs " + (",".join(map(str, self.inputs)) or "-"),
            "# outputs " + (",".join(map(str, self.outputs)) or "-"),
        ]
        for bname in sorted(self.blocks):
            lines.append(f"# block {bname} " + (",".join(map(str, self.blocks[bname])) or "-"))
        body = []
        for t, level in enumerate(self.levels):
            chunk = [f"{t} {g}" for g in level]
            body.append("\n".join(chunk))
        return "\n".join(lines) + "\n\n" + "\n\n".join(body) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        p = n_wires = None
        name = ""
        inputs: tuple[int, ...] = ()
        outputs: tuple[int, ...] = ()
        blocks: dict[str, tuple[int, ...]] = {}
        levels: dict[int, list[Gate]] = {}

        def ints(s):
            return () if s == "-" else tuple(int(x) for x in s.split(","))

        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            if parts[0] == "#":
                if parts[1] == "p":
                    p, n_wires = int(parts[2]), int(parts[4])
                    name = "" if parts[6] == "-" else parts[6]
                elif parts[1] == "inputs":
                    inputs = ints(parts[2])
                elif parts[1] == "outputs":
                    outputs = ints(parts[2])
                elif parts[1] == "block":
                    blocks[parts[2]] = ints(parts[3])
                continue
            t = int(parts[0])
            levels.setdefault(t, []).append(Gate(parts[1], ints(parts[3]), ints(parts[2])))
        depth = max(levels) + 1 if levels else 0
        return cls(p, n_wires, [levels.get(t, []) for t in range(depth)], inputs, outputs, blocks, name)

    def relabeled(self, mapping: dict[int, int], n_wires: int | None = None) -> "Circuit":
        return Circuit(
            self.p,
            n_wires or self.n_wires,
            [[g.renamed(mapping) for g in level] for level in self.levels],
            tuple(mapping[w] for w in self.inputs),
            tuple(mapping[w] for w in self.outputs),
            {k: tuple(mapping[w] for w in v) for k, v in self.blocks.items()},
            self.name,
        )


class CircuitBuilder:
    """Collects gates and assigns each to the earliest level its wires allow.

    Fresh wires get their ``add`` gate just before first use, so ancillas do
    not sit idle from the start of the circuit. ``barrier`` forces later
    gates after everything emitted so far.
    """

    def __init__(self, p: int, name: str = ""):
        self.p = p
        self.name = name
        self.n_wires = 0
        self.inputs: list[int] = []
        self.blocks: dict[str, tuple[int, ...]] = {}
        self._free: dict[int, int] = {}
        self._pending: set[int] = set()
        self._live: set[int] = set()
        self._levels: dict[int, list[Gate]] = {}
        self._floor = 0
        # optional owner tag recorded for every placed gate: (level, targets) -> tag
        self.tag = None
        self.tags: dict[tuple[int, tuple[int, ...]], object] = {}

    # wires
    def _new(self, n: int) -> list[int]:
        ws = list(range(self.n_wires, self.n_wires + n))
        self.n_wires += n
        return ws

    def input_block(self, name: str, size: int) -> list[int]:
        ws = self._new(size)
        for w in ws:
            self._free[w] = 0
            self._live.add(w)
        self.inputs += ws
        self.blocks[name] = tuple(ws)
        return ws

    def fresh(self, n: int = 1) -> list[int]:
        ws = self._new(n)
        self._pending.update(ws)
        return ws

    def fresh1(self) -> int:
        return self.fresh(1)[0]

    def _place(self, level: int, gate: Gate):
        self._levels.setdefault(level, []).append(gate)
        if self.tag is not None:
            self.tags[(level, gate.targets)] = self.tag

    @property
    def depth(self) -> int:
        return max(self._levels) + 1 if self._levels else 0

    def barrier(self):
        self._floor = max(self._floor, self.depth)

    def gate(self, name: str, targets: Sequence[int], params: Sequence[int] = ()) -> Gate:
        targets = tuple(int(q) for q in targets)
        g = Gate(name, targets, tuple(int(v) % self.p if name != "restart" else int(v) for v in params))
        for q in targets:
            if q not in self._live and q not in self._pending:
                raise BadTargets(f"wire {q} is not alive")
        pend = [q for q in targets if q in self._pending]
        lvl = max([self._floor] + [self._free[q] for q in targets if q not in self._pending])
        if pend:
            lvl = max(lvl, self._floor + 1)
            for q in pend:
                self._place(lvl - 1, Gate("add", (q,)))
                self._pending.discard(q)
                self._live.add(q)
        self._place(lvl, g)
        for q in targets:
            self._free[q] = lvl + 1
        return g

    def gates(self, gates: Iterable[Gate]):
        for g in gates:
            self.gate(g.name, g.targets, g.params)

    def inverse_of(self, gate: Gate):
        self.gates(inverse_gates(self.p, gate))

    def discard(self, wires: Iterable[int]):
        for q in wires:
            if q in self._pending:
                self._pending.discard(q)
                continue
            if q not in self._live:
                raise BadTargets(f"discarding dead wire {q}")
            lvl = max(self._floor, self._free[q])
            self._place(lvl, Gate("discard", (q,)))
            self._live.discard(q)
            self._free[q] = lvl + 1

    def materialize(self, wires: Iterable[int]):
        """Emit pending adds now (for wires that are outputs but never touched)."""
        for q in wires:
            if q in self._pending:
                lvl = self._floor
                self._place(lvl, Gate("add", (q,)))
                self._pending.discard(q)
                self._live.add(q)
                self._free[q] = lvl + 1

    def append_circuit(self, circ: Circuit, input_wires: Sequence[int], rigid: bool = True) -> dict[int, int]:
        """Replay ``circ`` with its inputs bound to ``input_wires``; returns the wire map.

        With ``rigid`` the sub-circuit keeps its own level structure (shifted to
        start after its inputs are free), so serialisation inside it survives.
        """
        if len(input_wires) != len(circ.inputs):
            raise BadTargets("input count mismatch")
        wmap = dict(zip(circ.inputs, input_wires))
        if not rigid:
            for _, g in circ.gates():
                if g.name == "add":
                    wmap[g.targets[0]] = self.fresh1()
                elif g.name == "discard":
                    self.discard([wmap[g.targets[0]]])
                else:
                    self.gate(g.name, [wmap[q] for q in g.targets], g.params)
            self.materialize(wmap[w] for w in circ.outputs)
            return wmap
        for q in input_wires:
            if q in self._pending:
                self.materialize([q])
        base = max([self._floor] + [self._free[q] for q in input_wires])
        for t, g in circ.gates():
            lvl = base + t
            if g.name == "add":
                q = self._new(1)[0]
                wmap[g.targets[0]] = q
                self._live.add(q)
            else:
                for q in g.targets:
                    if wmap[q] not in self._live:
                        raise BadTargets(f"wire {wmap[q]} is not alive")
            mapped = g.renamed(wmap)
            self._place(lvl, mapped)
            for q in mapped.targets:
                self._free[q] = lvl + 1
            if g.name == "discard":
                self._live.discard(mapped.targets[0])
        return wmap

    def build(self, outputs: Sequence[int], blocks: dict[str, Sequence[int]] | None = None) -> Circuit:
        self.materialize(outputs)
        extra = self._live - set(outputs)
        if extra:
            raise BadTargets(f"wires left alive but not declared outputs: {sorted(extra)}")
        depth = self.depth
        # drop levels left empty by barriers, keeping the tags aligned
        kept = [t for t in range(depth) if self._levels.get(t)]
        renum = {t: i for i, t in enumerate(kept)}
        levels = [self._levels[t] for t in kept]
        self.tags = {(renum[t], tg): v for (t, tg), v in self.tags.items()}
        allb = dict(self.blocks)
        for k, v in (blocks or {}).items():
            allb[k] = tuple(v)
        return Circuit(self.p, self.n_wires, levels, tuple(self.inputs), tuple(outputs), allb, self.name)
