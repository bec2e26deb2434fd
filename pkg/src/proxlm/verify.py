"""Executable invariant suite: oracle self-checks and per-run certificates.

Each check returns a :class:`CheckResult`; the CLI ``verify`` command prints
one line per check and fails if any check fails.  The same helpers back the
test suite, so solver runs are validated against the exact per-iteration
inequalities they are supposed to maintain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BoxIndicator,
    CompositeProblem,
    OracleLedger,
    adjoint_error,
    ledger_cost,
    linearize,
    stationarity,
)
from .lm import RunTrace
from .problems import finite_diff_check


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.detail}"


def sample_points(problem: CompositeProblem, n: int, seed: int = 0):
    """Random points in (the interior of) dom g, scaled for fd checks."""
    rng = np.random.default_rng(seed)
    reg = problem.regularizer
    pts = []
    for _ in range(n):
        x = rng.uniform(-2.0, 2.0, size=problem.dim_x)
        if isinstance(reg, BoxIndicator):
            lo = np.broadcast_to(reg.lower, x.shape).astype(float)
            hi = np.broadcast_to(reg.upper, x.shape).astype(float)
            width = hi - lo
            pad = np.where(np.isfinite(width), 0.05 * width, 0.05)
            low_eff = np.where(np.isfinite(lo), lo + pad, -2.0)
            hi_eff = np.where(np.isfinite(hi), hi - pad, 2.0)
            x = low_eff + (x + 2.0) / 4.0 * (hi_eff - low_eff)
        pts.append(x)
    return pts


def check_adjoint(problem: CompositeProblem, n_points: int = 20,
                  seed: int = 0, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for x in sample_points(problem, n_points, seed):
        u = rng.standard_normal(problem.dim_x)
        v = rng.standard_normal(problem.dim_r)
        worst = max(worst, adjoint_error(problem, x, u, v))
    return CheckResult("adjoint identity", worst <= tol,
                       f"max mismatch {worst:.3e} (tol {tol:g})")


def check_jvp_finite_diff(problem: CompositeProblem, n_points: int = 20,
                          seed: int = 0, tol: float = 1e-5) -> CheckResult:
    worst = 0.0
    for i, x in enumerate(sample_points(problem, n_points, seed)):
        worst = max(worst, finite_diff_check(problem, x, directions=3,
                                             seed=seed + i))
    return CheckResult("jvp finite differences", worst <= tol,
                       f"max rel error {worst:.3e} (tol {tol:g})")


def check_prox_optimality(problem: CompositeProblem, n_trials: int = 20,
                          seed: int = 0, tol: float = 1e-10) -> CheckResult:
    """Returned prox points satisfy the first-order condition
    s*(x - z) in the subdifferential of g at z."""
    reg = problem.regularizer
    dist = getattr(reg, "subdiff_dist", None)
    if dist is None:
        return CheckResult("prox optimality", True, "no closed form; skipped")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        x = 3.0 * rng.standard_normal(problem.dim_x)
        s = float(np.exp(rng.uniform(-3, 3)))
        z = reg.prox(x, s)
        worst = max(worst, dist(z, s * (x - z)))
    return CheckResult("prox optimality", worst <= tol,
                       f"max subdifferential distance {worst:.3e}")


def check_model_consistency(problem: CompositeProblem, n_points: int = 5,
                            seed: int = 0) -> CheckResult:
    """Damped model value at its base equals F minus g exactly."""
    ok = True
    worst = 0.0
    for x in sample_points(problem, n_points, seed):
        model = linearize(problem, x, mu=0.7)
        lhs = model.value(x)
        rhs = problem.outer_loss.value(problem.residual(x))
        ok = ok and (lhs == rhs)
        worst = max(worst, abs(lhs - rhs))
    return CheckResult("model consistency at base", ok,
                       f"max |model - loss| {worst:.3e} (must be 0)")


def check_descent(problem: CompositeProblem, trace: RunTrace,
                  theta: float) -> CheckResult:
    """Accepted steps decrease F by at least (1-theta)/2 * mu * ||dx||^2."""
    worst = -np.inf
    ok = True
    rec = trace.records
    for a, b in zip(rec[:-1], rec[1:]):
        slack = (a.F - 0.5 * (1.0 - theta) * a.mu
                 * float(np.dot(b.x - a.x, b.x - a.x))) - b.F
        tol = 1e-12 * (1.0 + abs(a.F))
        ok = ok and (slack >= -tol)
        worst = max(worst, -slack)
    detail = "no accepted steps" if len(rec) < 2 else \
        f"worst violation {max(worst, 0.0):.3e}"
    return CheckResult("descent inequality", ok, detail)


def check_membership(problem: CompositeProblem, trace: RunTrace,
                     theta: float, tol: float = 1e-10) -> CheckResult:
    """Accepted steps satisfy the subproblem certificate with the exact
    subdifferential distance recomputed post hoc."""
    dist = getattr(problem.regularizer, "subdiff_dist", None)
    if dist is None:
        return CheckResult("subproblem membership", True,
                           "no closed form; skipped")
    worst = 0.0
    ok = True
    rec = trace.records
    for a, b in zip(rec[:-1], rec[1:]):
        if a.mu <= 0:
            continue
        model = linearize(problem, a.x, a.mu)
        omega_bar = stationarity(problem, b.x, model.grad(b.x))
        bound = theta * a.mu * float(np.linalg.norm(b.x - a.x)) + tol
        ok = ok and (omega_bar <= bound)
        worst = max(worst, omega_bar - bound + tol)
    detail = "no accepted steps" if len(rec) < 2 else \
        f"worst certificate slack {worst:.3e} (tol {tol:g})"
    return CheckResult("subproblem membership", ok, detail)


def check_mu_bracketing(trace: RunTrace, rho_min: float) -> CheckResult:
    """rho_min*sqrt(delta_k) <= mu_k <= rho_final*sqrt(delta_k)."""
    rec = [r for r in trace.records if r.mu > 0]
    if not rec:
        return CheckResult("mu bracketing", True, "no accepted steps")
    rho_final = trace.records[-1].rho
    ok = True
    for r in rec:
        lo = rho_min * np.sqrt(r.delta) * (1.0 - 1e-12)
        hi = rho_final * np.sqrt(r.delta) * (1.0 + 1e-12)
        ok = ok and (lo <= r.mu <= hi)
    return CheckResult("mu bracketing", ok,
                       f"{len(rec)} steps within [rho_min, rho_final]*sqrt(delta)")


def check_trace_monotone(trace: RunTrace) -> CheckResult:
    F = trace.column("F")
    cost = trace.column("oracle_cost")
    # F is monotone up to the same roundoff slack the descent check allows
    ok_f = all(b <= a + 1e-12 * (1.0 + abs(a)) for a, b in zip(F[:-1], F[1:]))
    ok_c = all(b >= a for a, b in zip(cost[:-1], cost[1:]))
    return CheckResult("trace monotonicity", ok_f and ok_c,
                       f"F nonincreasing: {ok_f}, cost nondecreasing: {ok_c}")


def check_ledger(ledger: OracleLedger) -> CheckResult:
    recomputed = ledger_cost(ledger)
    ok = recomputed == ledger.weighted_cost
    return CheckResult("ledger consistency", ok,
                       f"incremental {ledger.weighted_cost} == recomputed {recomputed}")


def fit_terminal_order(deltas, window_hi: float = 1e-2,
                       window_lo: float = 1e-12, max_pairs: int = 3):
    """Least-squares slope of log(delta_{k+1}) against log(delta_k).

    Uses the trailing pairs whose predecessor lies in [window_lo, window_hi]
    (at most ``max_pairs`` of them); returns None with fewer than 2 usable
    pairs.  A slope near 2 indicates quadratic convergence of the gap
    sequence, near 1 linear convergence.
    """
    xs, ys = [], []
    for a, b in zip(deltas[:-1], deltas[1:]):
        if a <= 0 or b <= 0:
            continue
        if window_lo <= a <= window_hi:
            xs.append(np.log(a))
            ys.append(np.log(b))
    xs = np.asarray(xs[-max_pairs:])
    ys = np.asarray(ys[-max_pairs:])
    if xs.size < 2:
        return None
    dx = xs - xs.mean()
    return float(np.dot(dx, ys - ys.mean()) / np.dot(dx, dx))


def run_invariant_suite(problem: CompositeProblem, x0, lm_config,
                        seed: int = 0):
    """All checks on one problem: oracle self-tests plus a solver run."""
    from .lm import lm_solve  # local import to keep module load light

    results = [
        check_adjoint(problem, seed=seed),
        check_jvp_finite_diff(problem, seed=seed),
        check_prox_optimality(problem, seed=seed),
        check_model_consistency(problem, seed=seed),
    ]
    ledger = OracleLedger()
    x_final, trace = lm_solve(problem, x0, lm_config, ledger=ledger)
    results.append(check_descent(problem, trace, lm_config.theta))
    results.append(check_membership(problem, trace, lm_config.theta))
    results.append(check_mu_bracketing(trace, lm_config.rho_min))
    results.append(check_trace_monotone(trace))
    results.append(check_ledger(ledger))
    if problem.name == "toy_interval":
        hits = [r.k for r in trace.records
               if r.F - 1.0 <= 1e-12]
        detail = (f"objective floor reached at iteration {hits[0]}"
                  if hits else "objective floor not reached")
        results.append(CheckResult("finite termination", bool(hits), detail))
    return results, trace
