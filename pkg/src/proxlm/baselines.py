"""Comparison methods: backtracking proximal gradient and fixed-damping LM.

PG takes prox steps x+ = prox(x - grad H(x)/L, L) with the step weight L
adapted upward by backtracking, mirroring the rho adaptation of the main
solver.  DP runs the same outer structure as the main solver but with a
constant damping mu and a user-supplied curvature guess L for the
subproblem's initial step estimate; it neither adapts rho nor enforces a
descent test.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .apg import ApgConfig, SubproblemStall, apg_solve
from .core import (
    CompositeProblem,
    OracleLedger,
    ParameterDomain,
    linearize_base,
    objective_with_residual,
)
from .lm import IterationRecord, RunTrace, Status, _measure_stationarity


@dataclass(frozen=True)
class PgConfig:
    l_min: float = 1e-2
    alpha: float = 2.0
    epsilon: float = 1e-8
    max_iters: int = 100_000

    def __post_init__(self):
        if self.l_min <= 0:
            raise ParameterDomain("l_min must be positive")
        if self.alpha <= 1:
            raise ParameterDomain("alpha must exceed 1")


@dataclass(frozen=True)
class DpConfig:
    mu_fixed: float = 1.0
    L: float = 1.0
    theta: float = 0.5
    epsilon: float = 1e-8
    max_iters: int = 1000
    max_inner_iters: Optional[int] = None
    apg: ApgConfig = field(default_factory=ApgConfig)

    def __post_init__(self):
        if self.mu_fixed <= 0 or self.L <= 0:
            raise ParameterDomain("mu_fixed and L must be positive")


def pg_solve(problem: CompositeProblem, x_0, config: PgConfig = PgConfig(),
             ledger: Optional[OracleLedger] = None,
             cost_budget: Optional[float] = None):
    """Backtracking proximal gradient.  Returns (x_final, RunTrace).

    The accepted step weight L never decreases, so on problems with a known
    smooth-part Lipschitz constant the number of L increases is bounded by
    ceil(log_alpha(L_H / l_min)) + 1.
    """
    if ledger is None:
        ledger = OracleLedger()
    t0 = time.perf_counter()
    x = np.array(x_0, dtype=float, copy=True)
    if not np.isfinite(problem.regularizer.value(x)):
        raise ParameterDomain("starting point outside dom g")
    offset = problem.objective_offset
    loss = problem.outer_loss
    reg = problem.regularizer

    F, c = objective_with_residual(problem, x, ledger)
    L = config.l_min
    records = []
    status = Status.MAX_ITERS
    omega_measure = "subdiff"

    for k in range(config.max_iters + 1):
        if cost_budget is not None and ledger.weighted_cost >= cost_budget:
            status = Status.BUDGET_EXHAUSTED
            break
        delta = F - offset
        lin = linearize_base(problem, x, ledger, residual=c)
        grad_h = lin.grad_at_base()
        omega, omega_measure = _measure_stationarity(problem, x, grad_h, L,
                                                     ledger)
        rec = IterationRecord(k=k, F=F, delta=delta, omega=omega, rho=L,
                              mu=0.0, inner_iters=0, backtracks=0,
                              oracle_cost=ledger.weighted_cost,
                              wall_s=time.perf_counter() - t0,
                              x=np.array(x, copy=True))
        if omega <= config.epsilon:
            records.append(rec)
            status = Status.STATIONARY
            break
        if k == config.max_iters:
            records.append(rec)
            break

        H_x = loss.value(c)
        backtracks = 0
        while True:
            x_new = reg.prox(x - grad_h / L, L)
            ledger.charge("prox_apply")
            F_new, c_new = objective_with_residual(problem, x_new, ledger)
            H_new = F_new - reg.value(x_new)
            d = x_new - x
            bound = H_x + float(np.dot(grad_h, d)) + 0.5 * L * float(np.dot(d, d))
            # same roundoff slack as the inner solver's curvature test
            if H_new <= bound + 1e-12 * (abs(H_new) + abs(H_x)):
                break
            L *= config.alpha
            backtracks += 1

        rec.rho = L
        rec.mu = L
        rec.backtracks = backtracks
        rec.oracle_cost = ledger.weighted_cost
        rec.wall_s = time.perf_counter() - t0
        records.append(rec)
        x, F, c = x_new, F_new, c_new

    trace = RunTrace(records=records, status=status, solver="pg",
                     problem=problem.name, omega_measure=omega_measure)
    return x, trace


def dp_solve(problem: CompositeProblem, x_0, config: DpConfig = DpConfig(),
             ledger: Optional[OracleLedger] = None,
             cost_budget: Optional[float] = None):
    """Fixed-damping variant: constant mu, accelerated subproblem solver
    with the step estimate started at mu + L, unconditional acceptance."""
    if ledger is None:
        ledger = OracleLedger()
    t0 = time.perf_counter()
    x = np.array(x_0, dtype=float, copy=True)
    if not np.isfinite(problem.regularizer.value(x)):
        raise ParameterDomain("starting point outside dom g")
    offset = problem.objective_offset
    mu = config.mu_fixed
    apg_conf = replace(config.apg, theta=config.theta,
                       eta_init=config.mu_fixed + config.L,
                       max_inner_iters=config.max_inner_iters)

    F, c = objective_with_residual(problem, x, ledger)
    records = []
    status = Status.MAX_ITERS
    omega_measure = "subdiff"

    for k in range(config.max_iters + 1):
        if cost_budget is not None and ledger.weighted_cost >= cost_budget:
            status = Status.BUDGET_EXHAUSTED
            break
        delta = F - offset
        lin = linearize_base(problem, x, ledger, residual=c)
        grad_h = lin.grad_at_base()
        omega, omega_measure = _measure_stationarity(problem, x, grad_h, mu,
                                                     ledger)
        rec = IterationRecord(k=k, F=F, delta=delta, omega=omega, rho=0.0,
                              mu=0.0, inner_iters=0, backtracks=0,
                              oracle_cost=ledger.weighted_cost,
                              wall_s=time.perf_counter() - t0,
                              x=np.array(x, copy=True))
        if omega <= config.epsilon:
            records.append(rec)
            status = Status.STATIONARY
            break
        if k == config.max_iters:
            records.append(rec)
            break

        model = lin.damped(mu)
        try:
            x_new, report = apg_solve(model, problem.regularizer, apg_conf,
                                      ledger)
        except SubproblemStall as exc:
            rec.mu = mu
            rec.inner_iters = exc.report.inner_iters
            rec.oracle_cost = ledger.weighted_cost
            rec.wall_s = time.perf_counter() - t0
            records.append(rec)
            status = Status.SUBPROBLEM_STALL
            break
        F_new, c_new = objective_with_residual(problem, x_new, ledger)
        rec.mu = mu
        rec.inner_iters = report.inner_iters
        rec.oracle_cost = ledger.weighted_cost
        rec.wall_s = time.perf_counter() - t0
        rec.cert_residual = report.residual_final
        rec.step_norm = float(np.linalg.norm(x_new - x))
        records.append(rec)
        x, F, c = x_new, F_new, c_new

    trace = RunTrace(records=records, status=status, solver="dp",
                     problem=problem.name, omega_measure=omega_measure)
    return x, trace
