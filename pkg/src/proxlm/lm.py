"""Outer solver: adaptive damping mu = rho * sqrt(F(x_k) - (g* + h*)).

The damping weight rho starts at rho_min and only ever grows: whenever an
inexact subproblem solution fails the sufficient-decrease test

    F(x_new) <= F(x_k) - (1 - theta)/2 * mu * ||x_new - x_k||^2,

rho is multiplied by alpha and the same iterate is retried (reusing the
cached linearization; only the damping term changes).  Accepted steps
therefore satisfy the decrease inequality by construction, and the gap
F(x_k) - (g* + h*) is nonincreasing along the run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .apg import ApgConfig, SubproblemStall, apg_solve, cg_solve
from .core import (
    CompositeProblem,
    OracleLedger,
    ParameterDomain,
    UnsupportedRegularizer,
    linearize_base,
    objective_with_residual,
    prox_gradient_residual,
    stationarity,
)


class Status(Enum):
    STATIONARY = "Stationary"
    DELTA_FLOOR = "DeltaFloor"
    MAX_ITERS = "MaxIters"
    SUBPROBLEM_STALL = "SubproblemStall"
    BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass(frozen=True)
class LmConfig:
    theta: float = 0.5
    rho_min: float = 1e-2
    alpha: float = 2.0
    epsilon: float = 1e-8
    max_outer_iters: int = 1000
    delta_floor: float = 1e-14
    apg: ApgConfig = field(default_factory=ApgConfig)
    subsolver: str = "apg"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0 < self.alpha:
            raise ParameterDomain("need 0 < theta < 1 < alpha")
        if self.rho_min <= 0:
            raise ParameterDomain("rho_min must be positive")
        if self.subsolver not in ("apg", "cg"):
            raise ParameterDomain("subsolver must be 'apg' or 'cg'")


@dataclass
class IterationRecord:
    """State at iterate x_k plus statistics of the step leaving it.

    ``mu`` is the accepted damping of the step k -> k+1 (0.0 on the final
    row, which has no outgoing step), ``inner_iters`` the subproblem
    iterations of that step, ``backtracks`` the rho increases spent at k.
    """

    k: int
    F: float
    delta: float
    omega: float
    rho: float
    mu: float
    inner_iters: int
    backtracks: int
    oracle_cost: int
    wall_s: float
    x: np.ndarray = None
    eta_clamped: bool = False
    cert_residual: float = 0.0
    step_norm: float = 0.0


@dataclass
class RunTrace:
    records: list
    status: Status
    solver: str = "lm"
    problem: str = ""
    omega_measure: str = "subdiff"
    final_subsolve_first_iter: bool = False

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    @property
    def final_record(self):
        return self.records[-1] if self.records else None


CSV_HEADER = "k,F,delta,omega,rho,mu,inner_iters,backtracks,oracle_cost,wall_s"


def damping(rho: float, delta_k: float) -> float:
    """mu = rho * sqrt(delta_k); both arguments must be positive."""
    if rho <= 0:
        raise ParameterDomain("rho must be positive")
    if delta_k <= 0:
        raise ParameterDomain("optimality gap must be positive here")
    return rho * float(np.sqrt(delta_k))


def accept_test(F_new: float, F_old: float, theta: float, mu: float,
                step_norm: float) -> bool:
    """Sufficient decrease: F_new <= F_old - (1-theta)/2 * mu * step^2."""
    return F_new <= F_old - 0.5 * (1.0 - theta) * mu * step_norm * step_norm


def rho_backtrack_count(trace: RunTrace) -> int:
    """Total rho increases across the run."""
    return int(sum(r.backtracks for r in trace.records))


def _measure_stationarity(problem, x, grad_h, weight, ledger):
    """(omega, measure_name): closed-form subdifferential distance when the
    regularizer supports it, scaled prox-gradient residual otherwise."""
    try:
        return stationarity(problem, x, grad_h), "subdiff"
    except UnsupportedRegularizer:
        return (prox_gradient_residual(problem, x, grad_h, weight, ledger),
                "prox_residual")


def lm_solve(problem: CompositeProblem, x_0, config: LmConfig = LmConfig(),
             ledger: Optional[OracleLedger] = None,
             cost_budget: Optional[float] = None):
    """Run the damped-linearization solver from x_0.

    Returns ``(x_final, RunTrace)``; the trace holds one record per visited
    iterate (the step statistics on record k describe the accepted step
    leaving x_k) and the ledger-accounted cumulative oracle cost.
    """
    if ledger is None:
        ledger = OracleLedger()
    t0 = time.perf_counter()
    x = np.array(x_0, dtype=float, copy=True)
    offset = problem.objective_offset
    if not np.isfinite(problem.regularizer.value(x)):
        raise ParameterDomain("starting point outside dom g")

    apg_conf = replace(config.apg, theta=config.theta)
    F, c = objective_with_residual(problem, x, ledger)
    rho = config.rho_min
    records = []
    status = Status.MAX_ITERS
    omega_measure = "subdiff"
    final_first_iter = False

    for k in range(config.max_outer_iters + 1):
        if cost_budget is not None and ledger.weighted_cost >= cost_budget:
            status = Status.BUDGET_EXHAUSTED
            break
        delta = F - offset
        lin = linearize_base(problem, x, ledger, residual=c)
        grad_h = lin.grad_at_base()
        omega, omega_measure = _measure_stationarity(
            problem, x, grad_h, max(rho * np.sqrt(max(delta, 1e-300)), 1e-12),
            ledger)

        rec = IterationRecord(k=k, F=F, delta=delta, omega=omega, rho=rho,
                              mu=0.0, inner_iters=0, backtracks=0,
                              oracle_cost=ledger.weighted_cost,
                              wall_s=time.perf_counter() - t0,
                              x=np.array(x, copy=True))
        if omega <= config.epsilon:
            records.append(rec)
            status = Status.STATIONARY
            break
        if delta <= config.delta_floor * (1.0 + abs(F)):
            records.append(rec)
            status = Status.DELTA_FLOOR
            break
        if k == config.max_outer_iters:
            records.append(rec)
            status = Status.MAX_ITERS
            break

        backtracks = 0
        stalled = None
        while True:
            mu = damping(rho, delta)
            model = lin.damped(mu)
            try:
                if config.subsolver == "cg":
                    x_new, report = cg_solve(model, problem.regularizer,
                                             ledger, theta=config.theta)
                else:
                    x_new, report = apg_solve(model, problem.regularizer,
                                              apg_conf, ledger)
            except SubproblemStall as exc:
                stalled = exc
                break
            F_new, c_new = objective_with_residual(problem, x_new, ledger)
            step = float(np.linalg.norm(x_new - x))
            # machine-precision slack: once the predicted decrease sinks below
            # the roundoff of F itself, a literal comparison would keep
            # growing rho without bound
            slack = 1e-14 * (1.0 + abs(F))
            if F_new <= F - 0.5 * (1.0 - config.theta) * mu * step * step \
                    + slack:
                break
            rho *= config.alpha
            backtracks += 1

        if stalled is not None:
            rec.rho = rho
            rec.mu = mu
            rec.inner_iters = stalled.report.inner_iters
            rec.backtracks = backtracks
            rec.oracle_cost = ledger.weighted_cost
            rec.wall_s = time.perf_counter() - t0
            records.append(rec)
            status = Status.SUBPROBLEM_STALL
            break

        rec.rho = rho
        rec.mu = mu
        rec.inner_iters = report.inner_iters
        rec.backtracks = backtracks
        rec.oracle_cost = ledger.weighted_cost
        rec.wall_s = time.perf_counter() - t0
        rec.eta_clamped = getattr(report, "eta_clamped", False)
        rec.cert_residual = report.residual_final
        rec.step_norm = step
        records.append(rec)
        final_first_iter = report.inner_iters <= 1
        x, F, c = x_new, F_new, c_new

    trace = RunTrace(records=records, status=status, solver="lm",
                     problem=problem.name, omega_measure=omega_measure,
                     final_subsolve_first_iter=final_first_iter)
    return x, trace
