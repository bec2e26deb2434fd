"""Readers for the benchmark harness's file interfaces.

The solver harness emits one CSV per run with the fixed header
``k,F,delta,omega,rho,mu,inner_iters,backtracks,oracle_cost,wall_s`` (plus
``x1..xd`` iterate columns when run with --log-iterates) and a summary.json
naming the best run per solver.  Nothing here imports the solver package;
the files are the contract.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

REQUIRED_COLUMNS = ["k", "F", "delta", "omega", "rho", "mu", "inner_iters",
                    "backtracks", "oracle_cost", "wall_s"]


class SchemaError(ValueError):
    """A CSV or summary file does not match the documented interface."""


@dataclass
class TraceTable:
    path: Path
    columns: dict           # name -> float array
    iterate_columns: list   # names x1..xd in order

    @property
    def iterates(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in self.iterate_columns])

    def __len__(self):
        return len(self.columns["k"])


def read_trace(path) -> TraceTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: empty file, no header")
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path.name}: missing column {col!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path.name}: no data rows (header only)")
    data = np.array(rows, dtype=float)
    if data.shape[1] != len(header):
        raise SchemaError(f"{path.name}: ragged rows")
    columns = {name: data[:, i] for i, name in enumerate(header)}
    iterate_columns = [c for c in header if c not in REQUIRED_COLUMNS]
    return TraceTable(path=path, columns=columns,
                      iterate_columns=iterate_columns)


def read_summary(input_dir) -> dict:
    path = Path(input_dir) / "summary.json"
    if not path.exists():
        raise SchemaError(f"{path}: summary.json not found")
    with open(path, encoding="utf-8") as fh:
        summary = json.load(fh)
    if "best_per_solver" not in summary or "runs" not in summary:
        raise SchemaError(f"{path}: missing 'best_per_solver' or 'runs'")
    return summary


def best_traces(input_dir) -> dict:
    """solver name -> TraceTable of its best grid point."""
    summary = read_summary(input_dir)
    out = {}
    for solver, csv_name in sorted(summary["best_per_solver"].items()):
        out[solver] = read_trace(Path(input_dir) / csv_name)
    if not out:
        raise SchemaError(f"{input_dir}: summary names no runs")
    return out


def terminal_slope(deltas, window_hi=1e-2, window_lo=1e-12, max_pairs=3):
    """Slope of log(delta_{k+1}) vs log(delta_k) over the trailing pairs
    whose predecessor lies in [window_lo, window_hi]; None if fewer than 2."""
    xs, ys = [], []
    for a, b in zip(deltas[:-1], deltas[1:]):
        if a > 0 and b > 0 and window_lo <= a <= window_hi:
            xs.append(np.log(a))
            ys.append(np.log(b))
    xs = np.asarray(xs[-max_pairs:])
    ys = np.asarray(ys[-max_pairs:])
    if xs.size < 2:
        return None
    dx = xs - xs.mean()
    return float(np.dot(dx, ys - ys.mean()) / np.dot(dx, dx))
