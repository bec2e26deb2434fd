"""Command-line harness: run solver grids from a JSON config, verify invariants.

Commands:
    proxlm run <config.json> [--eps E] [--budget B] [--out DIR] [--log-iterates]
    proxlm verify <config.json>
    proxlm list-problems

Each (solver, grid point) pair becomes one run with its own ledger and trace,
written as a CSV (schema ``k,F,delta,omega,rho,mu,inner_iters,backtracks,
oracle_cost,wall_s``, plus ``x1..xd`` columns with --log-iterates).  A
summary.json records per-run outcomes and the best grid point per solver by
cost to the stationarity tolerance.  The JSON schema is documented in
docs/config_schema.md.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import DpConfig, PgConfig, dp_solve, pg_solve
from .core import CompositeProblem
from .lm import CSV_HEADER, LmConfig, RunTrace, lm_solve
from .problems import (
    make_linear_ls,
    make_nmf,
    make_rosenbrock,
    make_toy_interval,
    nmf_gaussian_init,
    random_linear_ls,
)
from .verify import run_invariant_suite

PROBLEM_KINDS = {
    "rosenbrock2": "2-D Rosenbrock least squares, start (0, 0)",
    "rosenbrock_nd": "d-dimensional Rosenbrock least squares, start (0.5, ...)",
    "nmf_synthetic": "synthetic nonnegative matrix factorization on sampled entries",
    "toy_interval": "1-D interval-constrained instance with finite termination",
    "linear_ls": "random affine least squares with known operator norm",
}


class ConfigError(ValueError):
    pass


def _corrupt_vjp(problem: CompositeProblem) -> CompositeProblem:
    """Test fixture: perturb the transpose operator so the adjoint check fails."""
    inner = problem.jvp_at

    def jvp_at(x):
        jvp, vjp = inner(x)

        def bad_vjp(v):
            out = np.array(vjp(v), copy=True)
            out[0] *= 1.0 + 1e-3
            return out

        return jvp, bad_vjp

    return CompositeProblem(
        dim_x=problem.dim_x, dim_r=problem.dim_r, residual=problem.residual,
        jvp_at=jvp_at, outer_loss=problem.outer_loss,
        regularizer=problem.regularizer, lipschitz_jac=problem.lipschitz_jac,
        name=problem.name + "_corrupt", extras=problem.extras)


def build_problem(spec: dict, seed: int = 0):
    """(problem, x0) from a problem spec dict."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("problem spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "rosenbrock2":
        problem = make_rosenbrock(2)
        x0 = np.zeros(2)
    elif kind == "rosenbrock_nd":
        d = int(spec.get("d", 100))
        problem = make_rosenbrock(d)
        x0 = np.full(d, float(spec.get("x0_value", 0.5)))
    elif kind == "nmf_synthetic":
        problem = make_nmf(int(spec.get("p", 20)), int(spec.get("q", 30)),
                           int(spec.get("r", 3)),
                           float(spec.get("lambda", 1e-4)),
                           int(spec.get("N", 200)),
                           int(spec.get("seed", seed)),
                           noise=float(spec.get("noise", 0.0)))
        x0 = nmf_gaussian_init(problem, int(spec.get("init_seed", seed)))
    elif kind == "toy_interval":
        problem = make_toy_interval()
        x0 = np.array([float(spec.get("x0_value", 0.5))])
    elif kind == "linear_ls":
        if "A" in spec:
            problem = make_linear_ls(np.asarray(spec["A"], dtype=float),
                                     np.asarray(spec["b"], dtype=float),
                                     box=spec.get("box"))
        else:
            problem = random_linear_ls(int(spec.get("n", 30)),
                                       int(spec.get("d", 20)),
                                       seed=int(spec.get("seed", seed)),
                                       sigma=spec.get("sigma"),
                                       box=spec.get("box"))
        x0 = np.zeros(problem.dim_x)
    else:
        raise ConfigError(f"unknown problem kind {kind!r}; "
                          f"known: {sorted(PROBLEM_KINDS)}")
    if "x0" in spec:
        x0 = np.asarray(spec["x0"], dtype=float)
    if spec.get("corrupt_vjp"):
        problem = _corrupt_vjp(problem)
    return problem, x0


def _as_grid(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def expand_solver_grid(entry: dict, default_eps: float):
    """Yield (label, params, callable(problem, x0, budget) -> (x, trace))."""
    if "name" not in entry:
        raise ConfigError("solver entry needs a 'name'")
    name = entry["name"]
    eps = float(entry.get("epsilon", default_eps))
    if name == "lm":
        for rho in _as_grid(entry.get("rho_min", 1e-2)):
            cfg = LmConfig(theta=float(entry.get("theta", 0.5)),
                           rho_min=float(rho),
                           alpha=float(entry.get("alpha", 2.0)),
                           epsilon=eps,
                           max_outer_iters=int(entry.get("max_outer_iters", 1000)),
                           delta_floor=float(entry.get("delta_floor", 1e-14)),
                           subsolver=entry.get("subsolver", "apg"))
            yield ({"rho_min": float(rho)},
                   lambda p, x0, b, c=cfg: lm_solve(p, x0, c, cost_budget=b))
    elif name == "pg":
        for l_min in _as_grid(entry.get("l_min", 1e-2)):
            cfg = PgConfig(l_min=float(l_min),
                           alpha=float(entry.get("alpha", 2.0)),
                           epsilon=eps,
                           max_iters=int(entry.get("max_iters", 100_000)))
            yield ({"l_min": float(l_min)},
                   lambda p, x0, b, c=cfg: pg_solve(p, x0, c, cost_budget=b))
    elif name == "dp":
        mus = _as_grid(entry.get("mu", 1.0))
        Ls = _as_grid(entry.get("L", 1.0))
        for mu, L in itertools.product(mus, Ls):
            cfg = DpConfig(mu_fixed=float(mu), L=float(L),
                           theta=float(entry.get("theta", 0.5)),
                           epsilon=eps,
                           max_iters=int(entry.get("max_iters", 1000)),
                           max_inner_iters=entry.get("max_inner_iters"))
            yield ({"mu": float(mu), "L": float(L)},
                   lambda p, x0, b, c=cfg: dp_solve(p, x0, c, cost_budget=b))
    else:
        raise ConfigError(f"unknown solver {name!r}; known: lm, pg, dp")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_trace_csv(trace: RunTrace, path: Path, log_iterates: bool = False):
    header = CSV_HEADER
    if log_iterates and trace.records:
        d = trace.records[0].x.size
        header = header + "," + ",".join(f"x{i + 1}" for i in range(d))
    lines = [header]
    for r in trace.records:
        cells = [str(r.k), _fmt(r.F), _fmt(r.delta), _fmt(r.omega),
                 _fmt(r.rho), _fmt(r.mu), str(r.inner_iters),
                 str(r.backtracks), str(r.oracle_cost), _fmt(r.wall_s)]
        if log_iterates:
            cells.extend(_fmt(v) for v in r.x)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cost_to_tolerance(trace: RunTrace, eps: float):
    for r in trace.records:
        if r.omega <= eps:
            return r.oracle_cost
    return None


def _rank_key(entry):
    ctt = entry["cost_to_tolerance"]
    if ctt is not None:
        return (0, ctt, entry["final_F"])
    return (1, entry["final_F"], entry["total_cost"])


def run(config: dict, output_dir=None, eps_override=None, budget_override=None,
        log_iterates=None) -> int:
    problem, x0 = build_problem(config.get("problem", {}),
                                seed=int(config.get("seed", 0)))
    solvers = config.get("solvers", [])
    if not solvers:
        raise ConfigError("config needs a non-empty 'solvers' list")
    eps = float(eps_override if eps_override is not None
                else config.get("epsilon", 1e-8))
    budget = float(budget_override if budget_override is not None
                   else config.get("budget", 1e9))
    if budget < 0:
        raise ConfigError("budget must be nonnegative")
    out = Path(output_dir if output_dir is not None
               else config.get("output_dir", "runs"))
    log_it = bool(config.get("log_iterates", False)
                  if log_iterates is None else log_iterates)
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    counters = {}
    for entry in solvers:
        entry = dict(entry)
        entry.setdefault("epsilon", eps)
        for params, solve in expand_solver_grid(entry, eps):
            idx = counters.get(entry["name"], 0)
            counters[entry["name"]] = idx + 1
            jobs.append((entry["name"], idx, params, solve))

    def execute(job):
        name, idx, params, solve = job
        try:
            x_final, trace = solve(problem, x0, budget)
            return (name, idx, params, trace, None)
        except Exception as exc:  # recorded per-run, does not kill the batch
            return (name, idx, params, None, f"{type(exc).__name__}: {exc}")

    workers = int(config.get("workers") or os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(execute, jobs))

    runs = []
    for name, idx, params, trace, error in outcomes:
        csv_name = f"{name}-{idx:02d}.csv"
        entry = {"solver": name, "params": params, "csv": csv_name}
        if error is not None:
            entry.update(status="Error", error=error, final_F=None,
                         final_omega=None, total_cost=None,
                         cost_to_tolerance=None)
        else:
            write_trace_csv(trace, out / csv_name, log_iterates=log_it)
            final = trace.final_record
            entry.update(
                status=trace.status.value,
                final_F=final.F if final else None,
                final_omega=final.omega if final else None,
                total_cost=final.oracle_cost if final else 0,
                cost_to_tolerance=cost_to_tolerance(trace, eps),
                omega_measure=trace.omega_measure,
            )
        runs.append(entry)

    best = {}
    for entry in runs:
        if entry["status"] == "Error" or entry["final_F"] is None:
            continue
        name = entry["solver"]
        if name not in best or _rank_key(entry) < _rank_key(best[name]):
            best[name] = entry
    summary = {
        "problem": config.get("problem", {}),
        "epsilon": eps,
        "budget": budget,
        "runs": runs,
        "best_per_solver": {k: v["csv"] for k, v in best.items()},
    }
    if best:
        winner = min(best.values(), key=_rank_key)
        summary["lowest_cost_solver"] = winner["solver"]
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n",
                                      encoding="utf-8")
    return 0


def verify(config: dict) -> int:
    problem, x0 = build_problem(config.get("problem", {}),
                                seed=int(config.get("seed", 0)))
    eps = float(config.get("epsilon", 1e-8))
    lm_conf = LmConfig(epsilon=eps,
                       max_outer_iters=int(config.get("max_outer_iters", 400)))
    results, _ = run_invariant_suite(problem, x0, lm_conf,
                                     seed=int(config.get("seed", 0)))
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


def list_problems() -> int:
    for kind in sorted(PROBLEM_KINDS):
        print(f"{kind}: {PROBLEM_KINDS[kind]}")
    return 0


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proxlm",
        description="Composite-problem solver benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the solver grid of a config")
    p_run.add_argument("config")
    p_run.add_argument("--eps", type=float, default=None,
                       help="override the stationarity tolerance")
    p_run.add_argument("--budget", type=float, default=None,
                       help="override the weighted oracle-cost budget")
    p_run.add_argument("--out", default=None, help="override the output dir")
    p_run.add_argument("--log-iterates", action="store_true", default=None,
                       help="append iterate coordinate columns to the CSVs")

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("config")

    sub.add_parser("list-problems", help="list bundled problem kinds")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _load_config(args.config)
            return run(config, output_dir=args.out, eps_override=args.eps,
                       budget_override=args.budget,
                       log_iterates=args.log_iterates)
        if args.command == "verify":
            return verify(_load_config(args.config))
        return list_problems()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
