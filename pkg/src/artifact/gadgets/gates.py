"""Gate vocabulary for both gate sets and their simulator payloads.

Qubit gates (p = 2) and generalized qupit gates carry distinct names so that
gate-set membership can be checked statically. Every unitary gate is either a
basis permutation with a diagonal phase (``perm`` kind) or a dense matrix
(``unitary`` kind); ``add``, ``discard`` and ``restart`` manage wires.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import BadParams
from ..state_sim import all_patterns, fourier, omega, radix


@dataclass(frozen=True, order=True)
class Gate:
    name: str
    targets: tuple[int, ...]
    params: tuple[int, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.targets)

    def renamed(self, mapping) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.targets), self.params)

    def __str__(self):
        ps = ",".join(str(v) for v in self.params) or "-"
        ts = ",".join(str(q) for q in self.targets)
        return f"{self.name} {ps} {ts}"


# name -> (arity, kind)
GATE_KINDS: dict[str, tuple[int, str]] = {
    # qubit gate set
    "not": (1, "perm"),
    "cnot": (2, "perm"),
    "phase_i": (1, "perm"),
    "cphase": (2, "perm"),
    "h": (1, "unitary"),
    "toffoli": (3, "perm"),
    # qupit gate set
    "gnot": (1, "perm"),
    "gcnot": (2, "perm"),
    "mult": (1, "perm"),
    "gphase": (1, "perm"),
    "fourier": (1, "unitary"),
    "gtoffoli": (3, "perm"),
    # shared
    "swap": (2, "perm"),
    "add": (1, "add"),
    "discard": (1, "discard"),
    "restart": (1, "restart"),
}

QUBIT_SET = frozenset({"not", "cnot", "phase_i", "cphase", "h", "toffoli", "swap", "add", "discard"})
QUPIT_SET = frozenset({"gnot", "gcnot", "mult", "gphase", "fourier", "gtoffoli", "swap", "add", "discard"})
ROUTING_EXTRAS = frozenset({"restart"})


def gate_set_for(p: int) -> frozenset[str]:
    return QUBIT_SET if p == 2 else QUPIT_SET


def kind(name: str) -> str:
    return GATE_KINDS[name][1]


def _perm(p: int, name: str, params: tuple[int, ...]):
    """Return (image table, phase vector or None) over all target patterns."""
    arity = GATE_KINDS[name][0]
    pats = all_patterns(p, arity)
    out = pats.copy()
    phase = None
    if name in ("not", "gnot"):
        c = params[0] if params else 1
        out[:, 0] = (pats[:, 0] + c) % p
    elif name in ("cnot", "gcnot"):
        out[:, 1] = (pats[:, 0] + pats[:, 1]) % p
    elif name in ("toffoli", "gtoffoli"):
        out[:, 2] = (pats[:, 2] + pats[:, 0] * pats[:, 1]) % p
    elif name == "swap":
        out = pats[:, ::-1].copy()
    elif name == "mult":
        c = params[0] % p
        if c == 0:
            raise BadParams("multiplier must be nonzero")
        out[:, 0] = pats[:, 0] * c % p
    elif name == "phase_i":
        if p != 2:
            raise BadParams("phase_i is a qubit gate")
        phase = 1j ** pats[:, 0]
    elif name == "cphase":
        if p != 2:
            raise BadParams("cphase is a qubit gate")
        phase = (-1.0 + 0j) ** (pats[:, 0] * pats[:, 1])
    elif name == "gphase":
        c = params[0] % p
        phase = omega(p) ** (c * pats[:, 0] % p)
    else:
        raise BadParams(f"{name} is not a permutation gate")
    return out, phase


def _matrix(p: int, name: str, params: tuple[int, ...]) -> np.ndarray:
    if name == "h":
        if p != 2:
            raise BadParams("h is a qubit gate")
        return fourier(2)
    if name == "fourier":
        r = params[0] % p if params else 1
        if r == 0:
            raise BadParams("Fourier exponent must be nonzero")
        return fourier(p, r)
    raise BadParams(f"{name} has no matrix payload")


@lru_cache(maxsize=None)
def payload(p: int, name: str, params: tuple[int, ...]):
    k = kind(name)
    if k == "perm":
        return _perm(p, name, params)
    if k == "unitary":
        return _matrix(p, name, params)
    return None


def gate_matrix(p: int, gate: Gate) -> np.ndarray:
    """Dense matrix of a unitary gate on its own targets."""
    k = kind(gate.name)
    if k == "unitary":
        return payload(p, gate.name, gate.params)
    if k != "perm":
        raise BadParams(f"{gate.name} is not unitary")
    table, phase = payload(p, gate.name, gate.params)
    t = gate.arity
    dim = p**t
    u = np.zeros((dim, dim), dtype=complex)
    src = np.arange(dim)
    dst = table @ radix(p, t)
    u[dst, src] = 1 if phase is None else phase
    return u


def inverse_gates(p: int, gate: Gate) -> list[Gate]:
    """Gates from the same set whose product undoes ``gate``."""
    n, ts, ps = gate.name, gate.targets, gate.params
    if n in ("not", "cnot", "toffoli", "swap", "h", "cphase"):
        return [gate]
    if n == "phase_i":
        return [gate] * 3
    if n == "gnot":
        return [Gate("gnot", ts, ((-ps[0]) % p,))]
    if n == "gcnot":
        return [Gate("mult", (ts[1],), (p - 1,)), gate, Gate("mult", (ts[1],), (p - 1,))]
    if n == "mult":
        return [Gate("mult", ts, (pow(ps[0], p - 2, p),))]
    if n == "gphase":
        return [Gate("gphase", ts, ((-ps[0]) % p,))]
    if n == "fourier":
        r = ps[0] if ps else 1
        return [Gate("fourier", ts, ((-r) % p,))]
    if n == "gtoffoli":
        return [Gate("mult", (ts[2],), (p - 1,)), gate, Gate("mult", (ts[2],), (p - 1,))]
    raise BadParams(f"no inverse for {n}")
