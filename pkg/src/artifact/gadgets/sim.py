"""Row-based branch simulator for leveled circuits.

The state is an ensemble of unnormalised pure branches stored as one table of
rows ``(branch id, digits, amplitude)``. Discarding a qupit splits every branch
by the discarded value (tracing out equals measuring and forgetting), and
proportional branches are merged again so the ensemble stays small.

Every branch carries an integer label. Label 0 is the fault-free run; a fault
injected with label ``f`` copies the label-0 branches, applies the Pauli to the
copy and relabels it, so one pass simulates many single-fault runs at once.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..errors import BadTargets, TooLarge
from ..state_sim import MixedState, SparseState, omega
from .circuit import Circuit
from .gates import Gate, kind, payload

PRUNE = 1e-13
ROW_CAP = 4_000_000


def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser, elementwise on uint64."""
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


_ZOBRIST_SEED = 0x2545F4914F6CDD1D
_zobrist_tables: dict[int, np.ndarray] = {}


def _zobrist(p: int, cols: int) -> np.ndarray:
    """Random uint64 per (column, digit) with digit 0 mapped to 0, so blank
    columns do not change a row hash. Tables for larger widths extend smaller
    ones (the generator is read sequentially)."""
    table = _zobrist_tables.get(p)
    if table is None or len(table) < cols:
        size = max(cols, 2 * len(table) if table is not None else 64)
        table = np.random.default_rng(_ZOBRIST_SEED).integers(0, 2**63, size=(size, p), dtype=np.int64)
        table = table.view(np.uint64) * np.uint64(2) + np.uint64(1)
        table[:, 0] = 0
        _zobrist_tables[p] = table
    return table


class BranchSim:
    """Rows live in a fixed pool of digit columns; a discarded wire frees its
    column (zeroed) for the next added wire. Each row carries a Zobrist hash of
    its digits that every gate updates incrementally.

    ``digits`` is stored column-major, shape (columns, rows), so a gate reads
    and writes contiguous memory."""

    def __init__(self, p: int, wires: Sequence[int], digits: np.ndarray, amps: np.ndarray,
                 bid: np.ndarray | None = None, labels: np.ndarray | None = None):
        self.p = p
        self.dtype = np.uint8 if p <= 256 else np.int16
        n = len(wires)
        self.amps = np.asarray(amps, dtype=complex)
        self.digits = np.ascontiguousarray(np.asarray(digits).reshape(len(self.amps), n).T, dtype=self.dtype)
        self.col = {w: j for j, w in enumerate(wires)}
        self.free: list[int] = []
        self.bid = np.zeros(len(self.amps), dtype=np.int64) if bid is None else np.asarray(bid, dtype=np.int64)
        self.labels = np.zeros(1, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
        self.dirty = False
        self.alias: dict[int, int] = {}
        self._plans: dict[tuple, tuple] = {}
        self.bits = max(1, int(np.ceil(np.log2(p))))
        self._z = _zobrist(p, max(n, 1))
        self.h = np.zeros(len(self.amps), dtype=np.uint64)
        for j in range(n):
            self.h ^= self._z[j][self.digits[j]]

    # construction
    @classmethod
    def from_state(cls, state, wires: Sequence[int]) -> "BranchSim":
        if isinstance(state, MixedState):
            ds, am, bi = [], [], []
            for i, b in enumerate(state.branches):
                ds.append(b.digits)
                am.append(b.amps)
                bi.append(np.full(len(b.amps), i))
            return cls(state.p, wires, np.concatenate(ds), np.concatenate(am), np.concatenate(bi),
                       np.zeros(len(state.branches), dtype=np.int64))
        if state.n != len(wires):
            raise BadTargets("wire count does not match the state width")
        return cls(state.p, wires, state.digits, state.amps)

    def copy(self) -> "BranchSim":
        out = object.__new__(BranchSim)
        out.__dict__.update(self.__dict__)
        for name in ("digits", "amps", "bid", "labels", "h"):
            setattr(out, name, getattr(self, name).copy())
        out.col = dict(self.col)
        out.free = list(self.free)
        out.alias = dict(self.alias)
        return out

    @property
    def rows(self) -> int:
        return len(self.amps)

    @property
    def wires(self) -> list[int]:
        return sorted(self.col, key=self.col.get)

    # keys
    def _packed(self, digits: np.ndarray) -> list[np.ndarray]:
        per = 62 // self.bits
        words = []
        for start in range(0, digits.shape[0], per):
            block = digits[start:start + per].astype(np.int64)
            shifts = np.arange(block.shape[0], dtype=np.int64)[:, None] * self.bits
            words.append((block << shifts).sum(axis=0))
        return words or [np.zeros(digits.shape[1], dtype=np.int64)]

    def _sorted_runs(self) -> tuple[np.ndarray, np.ndarray]:
        """Row order grouping equal (branch, digits) rows, and the run starts.

        Rows end up ordered by branch id, then by hash."""
        order = np.argsort(self.h)
        order = order[_stable_order(self.bid[order])]
        h, b = self.h[order], self.bid[order]
        same = (h[1:] == h[:-1]) & (b[1:] == b[:-1])
        pairs = np.flatnonzero(same)
        if pairs.size and np.any(self.digits[:, order[pairs]] != self.digits[:, order[pairs + 1]]):
            # hash collision: fall back to an exact sort on packed digits
            words = self._packed(self.digits)
            order = np.lexsort(tuple(words[::-1]) + (self.bid,))
            keys = [w[order] for w in words] + [self.bid[order]]
            same = np.ones(len(order) - 1, dtype=bool)
            for k in keys:
                same &= k[1:] == k[:-1]
        new = np.ones(len(order), dtype=bool)
        new[1:] = ~same
        return order, np.flatnonzero(new)

    def _combine(self):
        """Sort rows by (branch, digits), sum duplicates and prune zeros."""
        if self.rows == 0:
            return
        order, starts = self._sorted_runs()
        amps = np.add.reduceat(self.amps[order], starts)
        keep = np.abs(amps) > PRUNE
        idx = order[starts[keep]]
        self.digits = self._take_rows(idx)
        self.bid = self.bid[idx]
        self.h = self.h[idx]
        self.amps = amps[keep]

    def _take_rows(self, idx: np.ndarray) -> np.ndarray:
        """Digit table restricted to rows ``idx``; free columns stay zero."""
        out = np.zeros((self.digits.shape[0], len(idx)), dtype=self.dtype)
        for c in self.col.values():
            out[c] = self.digits[c].take(idx)
        return out

    def _renumber(self, new_bid: np.ndarray, bound: int, new_labels_of_old):
        """Densely renumber branch ids in [0, bound), keeping their order."""
        present = np.zeros(bound, dtype=bool)
        present[new_bid] = True
        self.bid = (np.cumsum(present) - 1)[new_bid]
        self.labels = new_labels_of_old(np.flatnonzero(present))

    def _branch_stats(self):
        """Run starts, phase-invariant content hash, row count and norm of
        every branch. Rows must be grouped by branch in ``_sorted_runs`` order."""
        starts = np.flatnonzero(np.r_[True, self.bid[1:] != self.bid[:-1]])
        a0 = self.amps[starts][self.bid]
        rel = self.amps / a0
        re = np.round(rel.real * 1e8).astype(np.int64).view(np.uint64)
        im = np.round(rel.imag * 1e8).astype(np.int64).view(np.uint64)
        with np.errstate(over="ignore"):
            h = _mix(self.h ^ _mix(re ^ _mix(im ^ np.uint64(0x5851F42D4C957F2D))))
            hs = np.add.reduceat(h, starts)
        counts = np.diff(np.r_[starts, self.rows])
        norms = np.add.reduceat(np.abs(self.amps) ** 2, starts)
        return starts, hs, counts, norms

    def merge(self):
        """Fold proportional branches with equal labels into one branch, then
        alias labels whose whole ensembles coincide."""
        self._combine()
        if self.rows == 0:
            self.labels = self.labels[:0]
            self.bid = self.bid[:0]
            return
        # rows are now grouped by branch (ascending ids)
        self._renumber(self.bid, len(self.labels), lambda u: self.labels[u])
        starts, hs, counts, norms = self._branch_stats()
        nb = len(starts)
        order = np.lexsort((hs, counts, self.labels))
        key_l, key_c, key_h = self.labels[order], counts[order], hs[order]
        first = np.ones(nb, dtype=bool)
        first[1:] = (key_l[1:] != key_l[:-1]) | (key_c[1:] != key_c[:-1]) | (key_h[1:] != key_h[:-1])
        if not first.all():
            group = np.cumsum(first) - 1
            rep = order[first]
            total = np.zeros(len(rep))
            np.add.at(total, group, norms[order])
            scale = np.ones(nb)
            scale[rep] = np.sqrt(total / norms[rep])
            keep_branch = np.zeros(nb, dtype=bool)
            keep_branch[rep] = True
            sel = keep_branch[self.bid]
            self.amps = self.amps[sel] * scale[self.bid[sel]]
            self.digits = self.digits[:, sel]
            self.h = self.h[sel]
            self._renumber(self.bid[sel], nb, lambda u: self.labels[u])
            starts, hs, counts, norms = self._branch_stats()
        self._alias_labels(hs, counts, norms)
        self.dirty = False

    def _alias_labels(self, hs, counts, norms):
        """Labels with identical ensembles evolve identically from here on:
        keep the smallest (label 0 when it matches) and drop the others' rows."""
        if len(np.unique(self.labels)) < 2:
            return
        normq = np.round(norms * 1e10).astype(np.int64).view(np.uint64)
        with np.errstate(over="ignore"):
            bsig = _mix(hs ^ _mix(counts.astype(np.uint64) ^ _mix(normq)))
        by_label = np.argsort(self.labels, kind="stable")
        labs = self.labels[by_label]
        lstart = np.flatnonzero(np.r_[True, labs[1:] != labs[:-1]])
        with np.errstate(over="ignore"):
            lsig = np.add.reduceat(bsig[by_label], lstart)
        lcount = np.diff(np.r_[lstart, len(labs)])
        ulabs = labs[lstart]
        order = np.lexsort((ulabs, lcount, lsig))
        sig_o, cnt_o, lab_o = lsig[order], lcount[order], ulabs[order]
        dup = np.zeros(len(order), dtype=bool)
        dup[1:] = (sig_o[1:] == sig_o[:-1]) & (cnt_o[1:] == cnt_o[:-1])
        if not dup.any():
            return
        rep_idx = np.maximum.accumulate(np.where(~dup, np.arange(len(order)), 0))
        for i in np.flatnonzero(dup):
            self.alias[int(lab_o[i])] = int(lab_o[rep_idx[i]])
        dropped = np.isin(self.labels, lab_o[dup])
        sel = ~dropped[self.bid]
        self.amps, self.digits, self.h = self.amps[sel], self.digits[:, sel], self.h[sel]
        self._renumber(self.bid[sel], len(self.labels), lambda u: self.labels[u])

    # gates
    def add(self, wire: int):
        if wire in self.col:
            raise BadTargets(f"wire {wire} already present")
        if not self.free:
            width = self.digits.shape[0]
            extra = max(8, width // 2)
            self.digits = np.concatenate([self.digits, np.zeros((extra, self.rows), dtype=self.dtype)], axis=0)
            self._z = _zobrist(self.p, width + extra)
            self.free = list(range(width + extra - 1, width - 1, -1))
        self.col[wire] = self.free.pop()

    def discard(self, wire: int):
        j = self.col.pop(wire)
        vals = self.digits[j].astype(np.int64)
        old_labels = self.labels
        self._renumber(self.bid * self.p + vals, len(old_labels) * self.p, lambda u: old_labels[u // self.p])
        np.bitwise_xor(self.h, self._z[j].take(vals), out=self.h)
        self.digits[j] = 0
        self.free.append(j)
        self.dirty = True

    def apply(self, gate: Gate):
        k = kind(gate.name)
        if k == "add":
            self.add(gate.targets[0])
            return
        if k == "discard":
            self.discard(gate.targets[0])
            return
        if k == "restart":
            self.discard(gate.targets[0])
            self.add(gate.targets[0])
            return
        cols = [self.col[w] for w in gate.targets]
        if k == "perm":
            table, phase = payload(self.p, gate.name, gate.params)
            if len(cols) == 1:
                idx = self.digits[cols[0]]
            else:
                idx = self.digits[cols[0]].astype(np.intp)
                for c in cols[1:]:
                    idx = idx * self.p + self.digits[c]
            delta, writes = self._perm_plan(gate, cols, table)
            np.bitwise_xor(self.h, delta.take(idx), out=self.h)
            for c, out in writes:
                self.digits[c] = out.take(idx)
            if phase is not None:
                self.amps = self.amps * phase.take(idx)
            return
        # dense single-qupit unitary: rows expand by p then recombine
        u = payload(self.p, gate.name, gate.params)
        if len(cols) != 1:
            raise BadTargets("dense gates act on one qupit")
        if self.dirty:
            self.merge()
        j = cols[0]
        p = self.p
        if self.rows * p > ROW_CAP:
            raise TooLarge(f"{self.rows * p} rows exceed the cap {ROW_CAP}")
        old = np.repeat(self.digits[j].astype(np.int64), p)
        digits = np.repeat(self.digits, p, axis=1)
        outv = np.tile(np.arange(p, dtype=np.int64), self.rows)
        digits[j] = outv
        amps = np.repeat(self.amps, p) * u[outv, old]
        self.h = np.repeat(self.h, p) ^ self._z[j][old] ^ self._z[j][outv]
        self.digits, self.amps, self.bid = digits, amps, np.repeat(self.bid, p)
        self._combine()

    def _perm_plan(self, gate: Gate, cols: list[int], table: np.ndarray):
        """Per input pattern: the row-hash change, and the new digit of every
        column the gate actually changes."""
        key = (gate.name, gate.params, tuple(cols))
        plan = self._plans.get(key)
        if plan is None:
            pats = np.array(np.unravel_index(np.arange(len(table)), (self.p,) * len(cols))).T
            delta = np.zeros(len(table), dtype=np.uint64)
            writes = []
            for i, c in enumerate(cols):
                delta ^= self._z[c][pats[:, i]] ^ self._z[c][table[:, i]]
                if np.any(table[:, i] != pats[:, i]):
                    writes.append((c, table[:, i].astype(self.dtype)))
            plan = self._plans[key] = (delta, writes)
        return plan

    def inject(self, faults: Iterable[tuple[int, int, int, int]]):
        """Copy label-0 branches once per fault ``(wire, c, c2, label)`` and apply B^c P^c2."""
        faults = list(faults)
        if not faults:
            return
        base_branches = np.flatnonzero(self.labels == 0)
        rows0 = np.flatnonzero(np.isin(self.bid, base_branches))
        remap = np.full(len(self.labels), -1, dtype=np.int64)
        remap[base_branches] = np.arange(len(base_branches))
        nb0 = len(base_branches)
        w = omega(self.p)
        ds, am, bi, labs, hs = [self.digits], [self.amps], [self.bid], [self.labels], [self.h]
        offset = len(self.labels)
        for wire, c, c2, label in faults:
            j = self.col[wire]
            d = self.digits[:, rows0]
            a = self.amps[rows0].copy()
            h = self.h[rows0].copy()
            old = d[j].astype(np.int64)
            if c2 % self.p:
                a = a * w ** ((c2 * old) % self.p)
            if c % self.p:
                new = (old + c) % self.p
                d[j] = new
                h ^= self._z[j][old] ^ self._z[j][new]
            ds.append(d)
            hs.append(h)
            am.append(a)
            bi.append(remap[self.bid[rows0]] + offset)
            labs.append(np.full(nb0, label, dtype=np.int64))
            offset += nb0
        self.digits = np.concatenate(ds, axis=1)
        self.amps = np.concatenate(am)
        self.bid = np.concatenate(bi)
        self.labels = np.concatenate(labs)
        self.h = np.concatenate(hs)
        if self.rows > ROW_CAP:
            raise TooLarge(f"{self.rows} rows exceed the cap {ROW_CAP}")

    def run(self, circuit: Circuit, start: int = 0, stop: int | None = None, faults=None):
        """Apply levels ``start..stop-1``; ``faults[t]`` is injected after level t."""
        stop = circuit.depth if stop is None else stop
        for t in range(start, stop):
            for g in circuit.levels[t]:
                self.apply(g)
            if faults and t in faults:
                if self.dirty:
                    self.merge()
                self.inject(faults[t])
            if self.dirty and self.rows > 20000:
                self.merge()
        return self

    # results
    def ensembles(self, wires: Sequence[int]) -> dict[int, MixedState]:
        """Per label, the ensemble on ``wires`` (other columns must be absent)."""
        if set(wires) != set(self.col):
            raise BadTargets("result wires must be exactly the live wires")
        self.merge()
        cols = [self.col[w] for w in wires]
        out: dict[int, list[SparseState]] = {}
        starts = np.flatnonzero(np.r_[True, self.bid[1:] != self.bid[:-1]]) if self.rows else np.array([], int)
        ends = np.r_[starts[1:], self.rows] if self.rows else np.array([], int)
        n = len(wires)
        for s, e in zip(starts, ends):
            b = self.bid[s]
            st = SparseState.from_arrays(self.p, n, self.digits[cols, s:e].T.astype(np.int64), self.amps[s:e], True)
            out.setdefault(int(self.labels[b]), []).append(st)
        result = {lab: MixedState(self.p, n, brs) for lab, brs in out.items()}
        for lab in self.alias:
            rep = lab
            while rep in self.alias:
                rep = self.alias[rep]
            if rep in result:
                result[lab] = result[rep]
        return result


def _stable_order(keys: np.ndarray) -> np.ndarray:
    """Stable argsort of non-negative ids by 16-bit radix passes."""
    if not len(keys):
        return np.zeros(0, dtype=np.intp)
    top = int(keys.max())
    if top < 1 << 16:
        return np.argsort(keys.astype(np.uint16), kind="stable")
    order = np.argsort((keys & 0xFFFF).astype(np.uint16), kind="stable")
    shift = 16
    while top >> shift:
        part = ((keys[order] >> shift) & 0xFFFF).astype(np.uint16)
        order = order[np.argsort(part, kind="stable")]
        shift += 16
    return order


REF_BASE = -1


def reference_wires(k: int) -> list[int]:
    return [REF_BASE - i for i in range(k)]


def run_circuit(circuit: Circuit, state, extra_wires: Sequence[int] = ()) -> MixedState:
    """Noiseless run. ``state`` covers ``circuit.inputs`` followed by ``extra_wires``."""
    sim = BranchSim.from_state(state, list(circuit.inputs) + list(extra_wires))
    sim.run(circuit)
    return sim.ensembles(list(circuit.outputs) + list(extra_wires))[0]
