"""Experiment reports: versioned JSON plus CSV tables.

Report bodies are deterministic given config and seed. Wall-clock timings
live under the single top-level key ``timings`` so two runs can be compared
with :func:`report_body`.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

SCHEMA_VERSION = "1.0"
OUT_DIR_ENV = "ARTIFACT_OUT_DIR"
DEFAULT_OUT_DIR = "artifact-out"

CSV_SCHEMAS = {
    "threshold-analytic": ["level", "effective_rate", "sparse_prob_bound"],
    "threshold-mc": ["trial_block", "sparse_fraction", "stderr"],
    "gadget-spread": ["t", "qupits", "affected_per_block"],
    "route": ["gate", "targets", "span", "swaps"],
}

JSON_SCHEMA = {
    "schema_version": "string, bumped on incompatible changes",
    "command": "subcommand path, e.g. 'threshold mc'",
    "config": "every option the run used (re-running with it reproduces all numbers)",
    "seed": "master seed; per-block streams use seed XOR block index",
    "results": "subcommand-specific payload",
    "rows": "tabular rows mirrored to the CSV file (may be empty)",
    "artifacts": "relative paths of files written next to the report",
    "timings": "wall-clock seconds per phase; the only non-deterministic field",
}


def output_dir(cli_value: str | None) -> Path:
    """--out wins, then the environment override, then the default."""
    path = Path(cli_value or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(float(obj.real)), _plain(float(obj.imag))]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return str(obj)
    return obj


def make_report(command: str, config: dict, seed: int | None, results: dict, rows: Sequence | None = None,
                artifacts: Iterable[str] = (), timings: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _plain(config),
        "seed": seed,
        "results": _plain(results),
        "rows": _plain(list(rows or [])),
        "artifacts": sorted(artifacts),
        "timings": _plain(timings or {}),
    }


def report_body(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, report: dict) -> Path:
    try:
        path.write_text(dumps(report))
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow(_plain(list(row)))
    except OSError as exc:
        raise OSError(f"cannot write table {path}: {exc}") from exc
    return path


def help_schema() -> str:
    lines = ["JSON report fields:"]
    lines += [f"  {k}: {v}" for k, v in JSON_SCHEMA.items()]
    lines.append("")
    lines.append("CSV columns by subcommand:")
    lines += [f"  {k}: {', '.join(v)}" for k, v in CSV_SCHEMAS.items()]
    lines.append("")
    lines.append(f"Output directory: --out, else ${OUT_DIR_ENV}, else ./{DEFAULT_OUT_DIR}")
    return "\n".join(lines) + "\n"
