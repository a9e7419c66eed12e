"""Locations, fault paths, noise samplers, recursive sparseness and Pauli frames."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadParams, LengthMismatch, NonClifford
from .gadgets.circuit import Circuit


@dataclass(frozen=True, order=True)
class Location:
    t: int
    qupits: tuple[int, ...]
    gate: str = field(default="id", compare=False)


def locations(circuit: Circuit) -> list[Location]:
    """Disjoint cover of every (qupit, level) pair; idle qupits get identity locations."""
    out = []
    for t, (level, live) in enumerate(zip(circuit.levels, circuit.live_wires())):
        used = set()
        for g in level:
            out.append(Location(t, tuple(g.targets), g.name))
            used.update(g.targets)
        for q in sorted(live - used):
            out.append(Location(t, (q,), "id"))
    return out


@dataclass(frozen=True)
class FaultPath:
    locations: frozenset[Location]

    @classmethod
    def of(cls, locs: Iterable[Location]) -> "FaultPath":
        return cls(frozenset(locs))

    def __len__(self):
        return len(self.locations)

    def __iter__(self):
        return iter(sorted(self.locations))

    def dump(self) -> str:
        return "".join(f"{loc.t} {','.join(map(str, loc.qupits))}\n" for loc in sorted(self.locations))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str  # "iid" or "burst"
    eta: float
    seed: int = 0
    burst_mean: float = 2.0

    def __post_init__(self):
        if self.kind not in ("iid", "burst"):
            raise BadParams(f"unknown noise kind {self.kind}")
        if not 0 <= self.eta < 1:
            raise BadParams("eta must lie in [0, 1)")
        if self.burst_mean < 1:
            raise BadParams("mean burst length must be at least 1")

    def sample(self, locs: Sequence[Location], seed: int | None = None) -> FaultPath:
        s = self.seed if seed is None else seed
        if self.kind == "iid":
            return sample_iid(locs, self.eta, s)
        return sample_burst(locs, self.eta, s, self.burst_mean)


def trial_seed(master: int, trial: int) -> int:
    """Per-trial RNG stream: master seed xor trial index."""
    return int(master) ^ int(trial)


def sample_iid(locs: Sequence[Location], eta: float, seed: int) -> FaultPath:
    if not 0 <= eta < 1:
        raise BadParams("eta must lie in [0, 1)")
    hits = np.random.default_rng(seed).random(len(locs)) < eta
    return FaultPath.of(loc for loc, h in zip(locs, hits) if h)


# ---------------------------------------------------------------- bursts


def burst_chain(eta: float, burst_mean: float) -> tuple[float, float]:
    """(P(fault | previous quiet), P(fault | previous faulty)) of the burst chain.

    Stationary fault rate is eta; runs of faults have mean length
    burst_mean / (1 - eta), and burst_mean = 1 gives independent faults.
    """
    if burst_mean < 1:
        raise BadParams("mean burst length must be at least 1")
    enter = eta / burst_mean
    stay = 1 - (1 - eta) / burst_mean
    return enter, stay


def burst_bits(n: int, eta: float, burst_mean: float, rng: np.random.Generator) -> np.ndarray:
    enter, stay = burst_chain(eta, burst_mean)
    u = rng.random(n)
    bits = np.zeros(n, dtype=bool)
    prev = u[0] < eta if n else False
    if n:
        bits[0] = prev
    for i in range(1, n):
        prev = u[i] < (stay if prev else enter)
        bits[i] = prev
    return bits


def sample_burst(locs: Sequence[Location], eta: float, seed: int, burst_mean: float = 2.0) -> FaultPath:
    """Two-state Markov chain over the time-ordered locations, started in equilibrium."""
    if not 0 <= eta < 1:
        raise BadParams("eta must lie in [0, 1)")
    order = sorted(range(len(locs)), key=lambda i: (locs[i].t, locs[i].qupits))
    bits = burst_bits(len(locs), eta, burst_mean, np.random.default_rng(seed))
    return FaultPath.of(locs[order[i]] for i in range(len(locs)) if bits[i])


def burst_path_probability(pattern: Sequence[int], eta: float, burst_mean: float) -> float:
    """Exact probability that the chain emits exactly ``pattern`` (0/1 per location)."""
    enter, stay = burst_chain(eta, burst_mean)
    prob = 1.0
    prev = None
    for bit in pattern:
        q = eta if prev is None else (stay if prev else enter)
        prob *= q if bit else 1 - q
        prev = bit
    return prob


def measure_burst_c(eta: float, burst_mean: float, v: int, k_max: int) -> float:
    """max over fault patterns of at most k_max faults among v locations of
    Pr_burst(pattern) / (eta^k (1-eta)^(v-k))."""
    worst = 0.0
    for k in range(k_max + 1):
        iid = eta**k * (1 - eta) ** (v - k)
        for pos in itertools.combinations(range(v), k):
            pat = np.zeros(v, dtype=int)
            pat[list(pos)] = 1
            worst = max(worst, burst_path_probability(pat, eta, burst_mean) / iid)
    return worst


# ----------------------------------------------------------- rectangles


@dataclass(frozen=True)
class RectangleTree:
    """Nested partition of leaf locations.

    ``parents[0][i]`` is the 1-rectangle of leaf i and ``parents[s][j]`` the
    (s+1)-rectangle containing s-rectangle j.
    """

    r: int
    leaves: tuple
    parents: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.parents) != self.r:
            raise BadParams("one parent map per level is required")
        size = len(self.leaves)
        for s, par in enumerate(self.parents):
            if len(par) != size:
                raise BadParams(f"level {s} parent map has the wrong length")
            size = int(par.max()) + 1 if len(par) else 0
            if set(np.unique(par)) != set(range(size)):
                raise BadParams(f"level {s + 1} rectangles must be numbered densely")

    def count(self, s: int) -> int:
        """Number of s-rectangles (s = 0 gives the leaves)."""
        if s == 0:
            return len(self.leaves)
        par = self.parents[s - 1]
        return int(par.max()) + 1 if len(par) else 0

    def members(self, s: int) -> list[list[int]]:
        """For each s-rectangle, the indices of the (s-1)-rectangles it contains."""
        out: list[list[int]] = [[] for _ in range(self.count(s))]
        for child, parent in enumerate(self.parents[s - 1]):
            out[int(parent)].append(child)
        return out

    def leaf_ancestor(self, s: int) -> np.ndarray:
        idx = np.arange(len(self.leaves))
        for level in range(s):
            idx = self.parents[level][idx]
        return idx

    def is_refinement(self) -> bool:
        """Every s-rectangle lies in exactly one (s+1)-rectangle (true by construction
        when all parent maps are total functions)."""
        return all(len(par) == self.count(s) for s, par in enumerate(self.parents))

    def to_nested(self):
        """Nested lists: roots -> ... -> leaf indices."""
        nodes = [[i] for i in range(len(self.leaves))]
        for s in range(1, self.r + 1):
            mem = self.members(s)
            nodes = [[nodes[c] if s > 1 else c for c in m] for m in mem]
        return nodes if self.r else list(range(len(self.leaves)))


def uniform_tree(A: int, r: int) -> RectangleTree:
    """Every rectangle holds exactly A sub-rectangles; A**r leaves."""
    n = A**r
    parents = tuple(np.arange(A ** (r - s)) // A for s in range(r))
    return RectangleTree(r, tuple(range(n)), parents)


def is_sparse(path, tree: RectangleTree, k: int) -> tuple[bool, dict[tuple[int, int], bool]]:
    """Recursive (r, k)-sparseness; the map holds the verdict of every rectangle."""
    if isinstance(path, FaultPath):
        index = {loc: i for i, loc in enumerate(tree.leaves)}
        hit = {index[loc] for loc in path.locations}
    else:
        hit = set(path)
    bad = np.zeros(len(tree.leaves), dtype=bool)
    if hit:
        bad[list(hit)] = True
    verdict = {(0, i): not bad[i] for i in range(len(bad))}
    for s in range(1, tree.r + 1):
        par = tree.parents[s - 1]
        counts = np.bincount(par[bad], minlength=tree.count(s)) if bad.any() else np.zeros(tree.count(s), int)
        bad = counts > k
        for j in range(len(bad)):
            verdict[(s, j)] = not bad[j]
    return (not bad.any()), verdict


# ------------------------------------------------------------ Pauli frames

_DIAGONAL = {"phase_i", "cphase", "gphase"}
_NON_CLIFFORD = {"toffoli", "gtoffoli"}


class PauliFrame:
    """Generalised Pauli B^x P^z per wire, up to global phase."""

    def __init__(self, p: int, wires: Iterable[int] = ()):
        self.p = p
        self.x: dict[int, int] = defaultdict(int, {w: 0 for w in wires})
        self.z: dict[int, int] = defaultdict(int, {w: 0 for w in wires})

    def inject(self, wire: int, c: int, c2: int):
        self.x[wire] = (self.x.get(wire, 0) + c) % self.p
        self.z[wire] = (self.z.get(wire, 0) + c2) % self.p

    def support(self, wires: Iterable[int]) -> tuple[int, ...]:
        return tuple(w for w in wires if self.x.get(w, 0) or self.z.get(w, 0))

    def apply(self, gate):
        n, ts, p = gate.name, gate.targets, self.p
        x, z = self.x, self.z
        if n in _NON_CLIFFORD:
            raise NonClifford(f"{n} does not map Paulis to Paulis")
        if n == "add":
            x[ts[0]] = z[ts[0]] = 0
        elif n == "discard":
            x.pop(ts[0], None)
            z.pop(ts[0], None)
        elif n == "restart":
            x[ts[0]] = z[ts[0]] = 0
        elif n in ("not", "gnot"):
            pass
        elif n in ("cnot", "gcnot"):
            a, b = ts
            x[b] = (x[b] + x[a]) % p
            z[a] = (z[a] - z[b]) % p
        elif n == "swap":
            a, b = ts
            x[a], x[b] = x[b], x[a]
            z[a], z[b] = z[b], z[a]
        elif n == "mult":
            c = gate.params[0] % p
            x[ts[0]] = x[ts[0]] * c % p
            z[ts[0]] = z[ts[0]] * pow(c, -1, p) % p
        elif n == "h":
            a = ts[0]
            x[a], z[a] = z[a], x[a]
        elif n == "fourier":
            a = ts[0]
            r = (gate.params[0] if gate.params else 1) % p
            x[a], z[a] = (-z[a] * pow(r, -1, p)) % p, (r * x[a]) % p
        elif n == "phase_i":
            a = ts[0]
            z[a] = (z[a] + x[a]) % p
        elif n == "cphase":
            a, b = ts
            za = (z[a] + x[b]) % p
            z[b] = (z[b] + x[a]) % p
            z[a] = za
        elif n == "gphase":
            pass
        else:
            raise NonClifford(f"no frame rule for {n}")


def pauli_frame_propagate(gadget, path, assignment: Mapping) -> list[tuple[int, ...]]:
    """Residual error support per output block after pushing the faults of
    ``path`` (with Pauli labels from ``assignment``) through the circuit.

    ``assignment[loc]`` lists one (c, c') per qupit of the location; faults act
    after the location's gate.
    """
    circ: Circuit = gadget.circuit if hasattr(gadget, "circuit") else gadget
    out_blocks = gadget.out_blocks if hasattr(gadget, "out_blocks") else [circ.outputs]
    for _, g in circ.gates():
        if g.name in _NON_CLIFFORD:
            raise NonClifford(f"{g.name} in circuit; use state-diff spread measurement")
    locs = list(path.locations if isinstance(path, FaultPath) else path)
    by_t: dict[int, list[Location]] = {}
    for loc in locs:
        by_t.setdefault(loc.t, []).append(loc)
    frame = PauliFrame(circ.p, circ.inputs)
    for t, level in enumerate(circ.levels):
        for g in level:
            frame.apply(g)
        for loc in by_t.get(t, []):
            labels = assignment[loc]
            if len(labels) != len(loc.qupits):
                raise LengthMismatch("one Pauli label per location qupit is required")
            for q, (c, c2) in zip(loc.qupits, labels):
                if q in frame.x:
                    frame.inject(q, c, c2)
    return [frame.support(blk) for blk in out_blocks]
