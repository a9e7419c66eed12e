"""Command-line front end.

Exit codes: 0 success, 1 a check or assertion failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import reporting
from .errors import ArtifactError

GADGET_CHOICES = [
    "not", "cnot", "phase", "cphase", "h", "swap",
    "gnot", "gcnot", "mult", "gphase", "fourier-transversal",
    "ec", "encode", "decode", "fourier", "degree-reduction", "toffoli",
]


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _code(args):
    from .quantum_codes import make_poly_code, steane_code

    kind = args.code or args.kind or "steane"
    if kind == "steane":
        return steane_code()
    if kind in ("poly", "polynomial"):
        if args.p is None or args.d is None:
            raise ConfigError("polynomial codes need --p and --d")
        return make_poly_code(args.p, args.d)
    raise ConfigError(f"unknown code kind {kind!r}")


def _add_code_args(p: argparse.ArgumentParser):
    p.add_argument("--code", choices=["steane", "poly"], help="code family (default steane)")
    p.add_argument("--kind", choices=["steane", "poly"], help="alias of --code")
    p.add_argument("--p", type=int, help="field size for polynomial codes")
    p.add_argument("--d", type=int, help="polynomial degree")


def parse_program(text: str, p: int, wires: int):
    """``"h 0; cnot 0 1; gnot(2) 1"`` -> Circuit on ``wires`` input wires."""
    from .gadgets.circuit import CircuitBuilder

    b = CircuitBuilder(p, "program")
    ws = b.input_block("in", wires)
    for part in filter(None, (s.strip() for s in text.split(";"))):
        tokens = part.split()
        name, params = tokens[0], ()
        if "(" in name:
            name, rest = name.split("(", 1)
            params = tuple(int(v) for v in rest.rstrip(")").split(","))
        try:
            targets = [ws[int(t)] for t in tokens[1:]]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad targets in {part!r}") from exc
        b.gate(name, targets, params)
    return b.build(ws)


def _circuit(args, p: int):
    from .gadgets.circuit import Circuit

    if args.circuit:
        try:
            return Circuit.from_text(Path(args.circuit).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read circuit {args.circuit}: {exc}") from exc
    if args.program:
        return parse_program(args.program, p, args.wires)
    raise ConfigError("give --circuit FILE or --program TEXT")


def _add_circuit_args(p: argparse.ArgumentParser):
    p.add_argument("--circuit", help="circuit in the text format")
    p.add_argument("--program", help="inline program, e.g. 'h 0; cnot 0 1'")
    p.add_argument("--wires", type=int, default=2, help="input wires for --program")


def _gadget(code, name: str, param: int):
    from .gadgets import library as lib

    if name == "ec":
        return lib.ec_gadget(code)
    if name == "encode":
        return lib.encode_gadget(code)
    if name == "decode":
        return lib.decode_gadget(code)
    if name == "fourier":
        return lib.fourier_gadget(code)
    if name == "degree-reduction":
        return lib.degree_reduction_gadget(code)
    if name == "toffoli":
        return lib.toffoli_gadget_poly(code)
    if name == "fourier-transversal":
        return lib.transversal_gadget(code, "fourier", param)
    return lib.transversal_gadget(code, name, param)


def _config(args) -> dict:
    skip = {"func", "out", "help_schema", "jobs"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ------------------------------------------------------------ subcommands


def cmd_code(args, out: Path):
    from .quantum_codes import codeword, ideal_ec, in_code_space
    from .state_sim import apply_unitary, pauli_matrix

    code = _code(args)
    results = {"kind": code.kind, "p": code.p, "m": code.m, "d": code.degree, "t": code.t,
               "logical_dim": code.logical_dim, "descriptor": code.descriptor()}
    if args.action == "build":
        path = out / "code.txt"
        path.write_text(code.descriptor())
        return results, [], ["code.txt"]
    checks = {}
    checks["nested"] = bool(code.C2.subcode_of(code.C1))
    if code.kind == "polynomial":
        m, d = code.m, code.degree
        checks["length"] = m == 3 * d + 1 and code.p > m
        checks["t_formula"] = code.t == min((m - d - 1) // 2, d // 2)
    words = [codeword(code, a) for a in range(code.logical_dim)]
    gram = np.array([[u.inner(v) for v in words] for u in words])
    checks["orthonormal"] = bool(np.allclose(gram, np.eye(len(words)), atol=1e-12))
    if code.t >= 1 and args.ec_sweep:
        worst = 0.0
        for a in (0, 1):
            for q in range(code.m):
                for c in range(code.p):
                    for c2 in range(code.p):
                        if (c, c2) == (0, 0):
                            continue
                        bad = apply_unitary(words[a], pauli_matrix(code.p, [(c, c2)]), [q])
                        fixed = ideal_ec(code, bad)
                        worst = max(worst, 1 - fixed.fidelity(words[a]))
        checks["ec_single_errors"] = worst < 1e-9
        results["ec_worst_infidelity"] = worst
    results["checks"] = checks
    if not all(checks.values()):
        raise CheckFailed(f"failed checks: {[k for k, v in checks.items() if not v]}", results)
    return results, [], []


def cmd_gadget(args, out: Path):
    from .gadgets.verify import verify_gadget

    code = _code(args)
    gadget = _gadget(code, args.gadget, args.param)
    if args.action == "verify":
        rep = verify_gadget(gadget, superpositions=args.superpositions, seed=args.seed)
        results = rep.to_dict()
        if not rep.ok:
            raise CheckFailed(f"{gadget.implements} fidelity {rep.min_fidelity}", results)
        return results, [], []
    from .gadgets.spread import measure_spread

    if args.routed:
        from .layout1d import routed_gadget

        gadget, _ = routed_gadget(gadget)
    rep = measure_spread(gadget, preceding_ec=not args.no_preceding_ec, jobs=args.jobs)
    results = rep.to_dict()
    rows = [(t, ",".join(map(str, q)), ",".join(map(str, v))) for (t, q), v in sorted(rep.per_location.items())]
    reporting.write_csv(out / "spread.csv", reporting.CSV_SCHEMAS["gadget-spread"], rows)
    results.pop("per_location")
    if args.max_l is not None and rep.l > args.max_l:
        raise CheckFailed(f"spread {rep.l} exceeds {args.max_l}", results)
    return results, [], ["spread.csv"]


def cmd_compile(args, out: Path):
    from .concat import rectangle_tree, simulate_r

    code = _code(args)
    circ = _circuit(args, code.p)
    sim = simulate_r(circ, code, args.r, ec=not args.no_ec)
    (out / "compiled.txt").write_text(sim.circuit.to_text())
    tree = rectangle_tree(sim)
    results = {
        "r": sim.r,
        "qupits_per_block": [len(b) for b in sim.input_blocks],
        "wires": sim.circuit.n_wires,
        "depth": sim.circuit.depth,
        "locations": len(tree.leaves),
        "rectangles": [tree.count(s) for s in range(sim.r + 1)],
        "max_rectangle_size": max((len(m) for m in tree.members(1)), default=0) if sim.r else 0,
        "gadgets": dict(sorted(sim.gadget_counts().items())),
    }
    if args.tree:
        results["rectangle_tree"] = tree.to_nested()
    return results, [], ["compiled.txt"]


def cmd_threshold(args, out: Path):
    from . import threshold as th

    if args.action == "analytic":
        mc = None
    else:
        from .fault_model import uniform_tree

        sampler = th.burst_mask(args.burst_mean) if args.noise == "burst" else None
        mc = th.monte_carlo_sparseness(uniform_tree(args.A, args.r), args.eta, args.k, args.trials, args.seed,
                                       sampler, jobs=args.jobs)
    results = th.report(args.A, args.k, args.eta, args.r, mc)
    if args.action == "analytic":
        rows = th.rates_csv_rows(args.eta, args.A, args.k, args.r)
        reporting.write_csv(out / "threshold.csv", reporting.CSV_SCHEMAS["threshold-analytic"], rows)
        if args.c is not None:
            results["correlated_bad_bound"] = th.correlated_bad_bound(args.c, args.v, args.A, args.k, args.eta, args.r)
        return results, rows, ["threshold.csv"]
    rows = mc.blocks
    reporting.write_csv(out / "mc.csv", reporting.CSV_SCHEMAS["threshold-mc"], rows)
    return results, rows, ["mc.csv"]


def cmd_route(args, out: Path):
    from .layout1d import LinearLayout, gate_set_preserved, is_nearest_neighbor, route_1d, verify_equivalence

    circ = _circuit(args, args.p or 2)
    layout = LinearLayout(tuple(int(v) for v in args.layout.split(","))) if args.layout else None
    rc = route_1d(circ, layout)
    (out / "routed.txt").write_text(rc.circuit.to_text())
    rows = [(g.name, ",".join(map(str, g.targets)), span, sw) for g, span, sw in rc.swaps_per_gate]
    reporting.write_csv(out / "route.csv", reporting.CSV_SCHEMAS["route"], rows)
    results = {"swaps": rc.swaps, "restarts": rc.restarts, "positions": rc.circuit.n_wires,
               "nearest_neighbor": is_nearest_neighbor(rc.circuit),
               "gate_set_preserved": gate_set_preserved(circ, rc.circuit)}
    if args.verify:
        results["equivalent"] = verify_equivalence(circ, rc, seed=args.seed)
    if not all(v for k, v in results.items() if isinstance(v, bool)):
        raise CheckFailed("routing check failed", results)
    return results, rows, ["routed.txt", "route.csv"]


def cmd_univcheck(args, out: Path):
    from .quantum_codes import univ_commutator_check

    reps = [univ_commutator_check(args.p, i, args.n_max) for i in (args.i if args.i is not None else range(args.p))]
    results = {"p": args.p, "reports": [dict(vars(r), passed=r.passed) for r in reps]}
    if not all(r.passed for r in reps):
        raise CheckFailed("universality check failed", results)
    return results, [], []


# ---------------------------------------------------------------- parser


def _add_common_args(p: argparse.ArgumentParser, default):
    p.add_argument("--out", default=default, help="output directory (overrides $ARTIFACT_OUT_DIR)")
    p.add_argument("--seed", type=int, default=default, help="master seed for every random choice")
    p.add_argument("--jobs", type=int, default=default, help="worker processes for sweeps and Monte Carlo")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Fault-tolerant simulation toolkit")
    ap.add_argument("--help-schema", action="store_true", help="describe the JSON and CSV outputs and exit")
    _add_common_args(ap, argparse.SUPPRESS)
    ap.set_defaults(out=None, seed=0, jobs=1)
    # the same options are accepted after the subcommand; SUPPRESS keeps the
    # subparser from overwriting values given before it
    common = argparse.ArgumentParser(add_help=False)
    _add_common_args(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=lambda **kw: argparse.ArgumentParser(parents=[common], **kw))

    code = sub.add_parser("code", help="build or check a quantum code")
    code.add_argument("action", choices=["build", "check"])
    _add_code_args(code)
    code.add_argument("--no-ec-sweep", dest="ec_sweep", action="store_false", help="skip the single-error sweep")
    code.set_defaults(func=cmd_code)

    gad = sub.add_parser("gadget", help="verify a gadget or measure its spread")
    gad.add_argument("action", choices=["verify", "spread"])
    _add_code_args(gad)
    gad.add_argument("--gadget", required=True, choices=GADGET_CHOICES)
    gad.add_argument("--param", type=int, default=1, help="gate parameter for parametrised gates")
    gad.add_argument("--superpositions", type=int, default=3)
    gad.add_argument("--no-preceding-ec", action="store_true", help="Bell-pair inputs instead of code blocks")
    gad.add_argument("--routed", action="store_true", help="measure the 1-D routed gadget")
    gad.add_argument("--max-l", type=int, help="fail when the measured spread exceeds this")
    gad.set_defaults(func=cmd_gadget)

    comp = sub.add_parser("compile", help="recursive simulation of a circuit")
    _add_code_args(comp)
    _add_circuit_args(comp)
    comp.add_argument("--r", type=int, default=1)
    comp.add_argument("--no-ec", action="store_true", help="omit the error-correction stages")
    comp.add_argument("--tree", action="store_true", help="embed the rectangle tree as nested arrays")
    comp.set_defaults(func=cmd_compile)

    th = sub.add_parser("threshold", help="analytic bounds or Monte Carlo sparseness")
    th.add_argument("action", choices=["analytic", "mc"])
    th.add_argument("--A", type=int, required=True)
    th.add_argument("--k", type=int, default=1)
    th.add_argument("--eta", type=float, default=1e-4)
    th.add_argument("--r", type=int, default=3)
    th.add_argument("--trials", type=int, default=100_000)
    th.add_argument("--noise", choices=["iid", "burst"], default="iid")
    th.add_argument("--burst-mean", type=float, default=2.0)
    th.add_argument("--c", type=float, help="correlation constant for the correlated bound")
    th.add_argument("--v", type=int, default=1, help="location count for the correlated bound")
    th.set_defaults(func=cmd_threshold)

    rt = sub.add_parser("route", help="1-D nearest-neighbour routing")
    _add_circuit_args(rt)
    rt.add_argument("--p", type=int, default=2)
    rt.add_argument("--layout", help="comma-separated slot order along the line")
    rt.add_argument("--verify", action="store_true", help="dense equivalence check (at most 12 qupits)")
    rt.set_defaults(func=cmd_route)

    uc = sub.add_parser("univcheck", help="eigenvalue check of the commutator pair")
    uc.add_argument("--p", type=int, default=5)
    uc.add_argument("--i", type=int, nargs="*")
    uc.add_argument("--n-max", type=int, default=1000)
    uc.set_defaults(func=cmd_univcheck)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.help_schema:
        sys.stdout.write(reporting.help_schema())
        return 0
    if not getattr(args, "func", None):
        ap.print_usage(sys.stderr)
        return 2
    command = args.command + (f" {args.action}" if hasattr(args, "action") else "")
    status = 0
    t0 = time.perf_counter()
    try:
        out = reporting.output_dir(args.out)
        results, rows, artifacts = args.func(args, out)
    except (ConfigError, ArtifactError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        msg, results = exc.args
        print(f"check failed: {msg}", file=sys.stderr)
        rows, artifacts, status = [], [], 1
    report = reporting.make_report(command, _config(args), args.seed, results, rows, artifacts,
                                   {"total_s": round(time.perf_counter() - t0, 6)})
    name = command.replace(" ", "-") + ".json"
    reporting.write_json(out / name, report)
    sys.stdout.write(reporting.dumps(reporting.report_body(report)))
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
