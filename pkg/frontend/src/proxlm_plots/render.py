"""Figure rendering from benchmark traces.

Three figure kinds:

* ``trajectory2d``  - iterate paths of the best run per solver on a
  2-dimensional problem (requires CSVs written with --log-iterates);
* ``cost_curves``   - objective value (log scale) against cumulative
  weighted oracle cost, one line per best run;
* ``order_diagnostic`` - log gap(k+1) against log gap(k) with fitted
  terminal slopes, separating quadratic from linear convergence.

Output is deterministic: timestamps are suppressed so re-rendering the same
inputs reproduces the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, best_traces, terminal_slope  # noqa: E402

FIGURE_KINDS = ("trajectory2d", "cost_curves", "order_diagnostic")

matplotlib.rcParams["svg.hashsalt"] = "proxlm-plots"


@dataclass
class PlotJob:
    input_dir: Path
    kind: str
    output: Path

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output = Path(self.output)
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"known: {FIGURE_KINDS}")


def _save(fig, output: Path):
    output.parent.mkdir(parents=True, exist_ok=True)
    if output.suffix.lower() == ".svg":
        fig.savefig(output, format="svg", metadata={"Date": None})
    else:
        fig.savefig(output)
    plt.close(fig)


def _render_trajectory2d(traces, ax):
    info = {}
    start = None
    for solver, trace in traces.items():
        if len(trace.iterate_columns) != 2:
            raise SchemaError(
                f"{trace.path.name}: trajectory2d needs exactly the iterate "
                f"columns x1,x2 (found {trace.iterate_columns or 'none'}); "
                f"re-run the harness with --log-iterates on a 2-D problem")
        xs = trace.iterates
        ax.plot(xs[:, 0], xs[:, 1], marker=".", markersize=3, linewidth=1.0,
                label=solver)
        if start is None:
            start = xs[0]
        info[solver] = {"final": (float(xs[-1, 0]), float(xs[-1, 1])),
                        "points": len(trace)}
    ax.plot([start[0]], [start[1]], "ks", markersize=6, label="start")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("iterate trajectories (best run per solver)")
    ax.legend()
    return info


def _render_cost_curves(traces, ax):
    info = {}
    for solver, trace in traces.items():
        cost = trace.columns["oracle_cost"]
        F = trace.columns["F"]
        ax.semilogy(cost, F.clip(min=1e-300), linewidth=1.2, label=solver)
        info[solver] = {"final_F": float(F[-1]), "total_cost": float(cost[-1])}
    ax.set_xlabel("cumulative weighted oracle cost")
    ax.set_ylabel("objective value")
    ax.set_title("objective vs oracle cost (best run per solver)")
    ax.legend()
    return info


def _render_order_diagnostic(traces, ax):
    info = {}
    for solver, trace in traces.items():
        d = trace.columns["delta"]
        pairs = [(a, b) for a, b in zip(d[:-1], d[1:]) if a > 0 and b > 0]
        if not pairs:
            continue
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        slope = terminal_slope(d)
        label = solver if slope is None else f"{solver} (slope {slope:.2f})"
        ax.loglog(a, b, marker="o", markersize=3, linewidth=0.8, label=label)
        info[solver] = {"slope": slope}
    lims = ax.get_xlim()
    ax.loglog(lims, lims, "k:", linewidth=0.8, label="slope 1")
    ax.set_xlabel("gap at step k")
    ax.set_ylabel("gap at step k+1")
    ax.set_title("terminal convergence order")
    ax.legend()
    return info


def render(job: PlotJob) -> dict:
    """Render one figure; returns per-solver info used by the figure."""
    traces = best_traces(job.input_dir)
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=110)
    try:
        if job.kind == "trajectory2d":
            info = _render_trajectory2d(traces, ax)
        elif job.kind == "cost_curves":
            info = _render_cost_curves(traces, ax)
        else:
            info = _render_order_diagnostic(traces, ax)
    except Exception:
        plt.close(fig)
        raise
    _save(fig, job.output)
    return info
