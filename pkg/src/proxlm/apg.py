"""Accelerated proximal gradient for the damped, strongly convex subproblem.

Minimizes g(x) + h(c_k + J (x - x_k)) + (mu/2) ||x - x_k||^2 over x, stopping
as soon as the gradient-difference certificate

    ||grad M(x_new) - grad M(y) - eta (x_new - y)|| <= theta * mu * ||x_new - x_k||

holds, where M is the smooth model part.  By the prox step's optimality
condition the left side bounds the model stationarity at x_new from above,
so the returned point is an admissible inexact subproblem solution.

A matrix-free conjugate gradient alternative handles the unregularized
least-squares case, where the subproblem is the damped normal system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    LinearizedModel,
    OracleLedger,
    ParameterDomain,
    QuadraticLoss,
    UnsupportedRegularizer,
    ZeroRegularizer,
    _charge,
)

HARD_ITER_CAP = 100_000


@dataclass(frozen=True)
class ApgConfig:
    """Tunables of the accelerated subproblem solver.

    ``theta`` sets the certificate tightness, ``alpha_bar`` the curvature
    growth on backtracking failure, ``beta_bar`` the shrink after accepted
    steps.  ``check_interval`` evaluates the termination certificate only
    every T-th iteration (saves one gradient per skipped check).
    ``max_inner_iters=None`` uses an adaptive cap that scales with the
    measured curvature ratio.  ``eta_init=None`` starts at alpha_bar*mu.
    """

    theta: float = 0.5
    alpha_bar: float = 2.0
    beta_bar: float = 0.95
    check_interval: int = 1
    max_inner_iters: Optional[int] = None
    eta_floor_factor: float = 1.0 + 1e-6
    eta_init: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ParameterDomain("theta must lie in (0, 1)")
        if not 0.0 < self.beta_bar < 1.0 < self.alpha_bar:
            raise ParameterDomain("need 0 < beta_bar < 1 < alpha_bar")
        if self.check_interval < 1:
            raise ParameterDomain("check_interval must be >= 1")
        if self.eta_floor_factor <= 1.0:
            raise ParameterDomain("eta_floor_factor must exceed 1")


@dataclass
class ApgReport:
    inner_iters: int
    eta_final: float
    residual_final: float
    backtracks: int = 0
    eta_max: float = 0.0
    eta_clamped: bool = False


class SubproblemStall(RuntimeError):
    """Inner iteration cap reached before the certificate held."""

    def __init__(self, message: str, best_point, best_residual: float,
                 report: ApgReport):
        super().__init__(message)
        self.best_point = best_point
        self.best_residual = best_residual
        self.report = report


def momentum_step(b_t: float, mu: float, eta: float):
    """One update of the estimate-sequence coefficient.

    Returns (b_next, tau) with b_next > b_t and tau in [0, 1]; requires
    eta > mu (the recurrence divides by eta - mu).
    """
    if eta <= mu:
        raise ParameterDomain("curvature estimate must exceed the damping")
    if b_t < 0:
        raise ParameterDomain("coefficient must be nonnegative")
    b_next = (1.0 + 2.0 * eta * b_t
              + math.sqrt(1.0 + 4.0 * eta * b_t * (1.0 + mu * b_t))) \
        / (2.0 * (eta - mu))
    tau = ((b_next - b_t) * (1.0 + mu * b_t)) \
        / (b_next * (1.0 + mu * b_t) + mu * b_t * (b_next - b_t))
    return b_next, tau


def backtrack_condition(model: LinearizedModel, y: np.ndarray,
                        x_next: np.ndarray, eta: float) -> bool:
    """Upper-quadratic acceptance test for the curvature estimate eta."""
    gy = model.grad(y)
    hy = model.value(y)
    hx = model.value(x_next)
    d = x_next - y
    return hx <= hy + float(np.dot(gy, d)) + 0.5 * eta * float(np.dot(d, d))


def _iter_cap(config: ApgConfig, eta_max: float, mu: float) -> int:
    if config.max_inner_iters is not None:
        return min(config.max_inner_iters, HARD_ITER_CAP)
    # generous multiple of the accelerated-rate iteration bound; grows as
    # backtracking reveals the actual curvature
    return min(HARD_ITER_CAP, math.ceil(50.0 * (2.0 + math.sqrt(eta_max / mu))))


def apg_solve(model: LinearizedModel, regularizer,
              config: ApgConfig = ApgConfig(),
              ledger: Optional[OracleLedger] = None):
    """Solve the damped subproblem to certificate accuracy.

    Returns ``(x_out, ApgReport)``.  Raises :class:`SubproblemStall` with the
    best iterate seen if the iteration cap is hit first.
    """
    mu = model.mu
    if mu <= 0:
        raise ParameterDomain("model damping must be positive")
    if ledger is None:
        ledger = model.ledger
    x0 = model.base_point
    xbar = x0
    z = np.array(x0, dtype=float, copy=True)
    eta = config.eta_init if config.eta_init is not None else config.alpha_bar * mu
    if eta <= mu:
        eta = config.eta_floor_factor * mu
    b = 0.0
    eta_max = eta
    clamped = False
    backtracks = 0
    t = 0
    best_gap = np.inf
    best_point = x0
    best_residual = np.inf

    while True:
        if t >= _iter_cap(config, eta_max, mu):
            report = ApgReport(inner_iters=t, eta_final=eta,
                               residual_final=best_residual,
                               backtracks=backtracks, eta_max=eta_max,
                               eta_clamped=clamped)
            raise SubproblemStall(
                f"subproblem certificate not reached in {t} iterations",
                best_point, best_residual, report)

        # momentum + prox step, re-done from the same b on curvature failure
        while True:
            b_next, tau = momentum_step(b, mu, eta)
            y = xbar + tau * (z - xbar)
            gy = model.grad(y)
            x_next = regularizer.prox(y - gy / eta, eta)
            _charge(ledger, "prox_apply")
            d = x_next - y
            hy = model.value(y)       # shares the forward product with grad(y)
            hx = model.value(x_next)
            bound = hy + float(np.dot(gy, d)) + 0.5 * eta * float(np.dot(d, d))
            # roundoff slack: near convergence the two values agree to machine
            # precision and a literal comparison would grow eta without bound
            if hx <= bound + 1e-12 * (abs(hx) + abs(hy)):
                break
            eta *= config.alpha_bar
            eta_max = max(eta_max, eta)
            backtracks += 1

        t += 1
        if t % config.check_interval == 0:
            gx = model.grad(x_next)   # forward product cached from value(x_next)
            residual = float(np.linalg.norm(gx - gy - eta * d))
            reference = config.theta * mu * float(np.linalg.norm(x_next - x0))
            if residual <= reference:
                report = ApgReport(inner_iters=t, eta_final=eta,
                                   residual_final=residual,
                                   backtracks=backtracks, eta_max=eta_max,
                                   eta_clamped=clamped)
                return x_next, report
            if residual - reference < best_gap:
                best_gap = residual - reference
                best_point = x_next
                best_residual = residual

        phi = (b_next - b) / (1.0 + mu * b_next)
        z = (1.0 - mu * phi) * z + (mu * phi) * y + (eta * phi) * d
        b = b_next
        xbar = x_next
        eta_new = config.beta_bar * eta
        floor = config.eta_floor_factor * mu
        if eta_new < floor:
            eta_new = floor
            clamped = True
        eta = eta_new


def cg_solve(model: LinearizedModel, regularizer=None,
             ledger: Optional[OracleLedger] = None, theta: float = 0.5,
             tol: float = 0.0, max_iters: Optional[int] = None):
    """Conjugate gradient on the damped normal equations.

    Only valid for zero regularizer and half-squared loss, where the
    subproblem reduces to (J^T J + mu I) s = -J^T c_k.  Terminates on the
    same certificate as :func:`apg_solve`; with g = 0 the model stationarity
    equals the normal-system residual norm, available for free inside CG.
    Returns ``(x_out, ApgReport)``.
    """
    if regularizer is not None and not isinstance(regularizer, ZeroRegularizer):
        raise UnsupportedRegularizer("cg subsolver requires g identically zero")
    loss = model.loss
    if not (isinstance(loss, QuadraticLoss) and loss.scale == 0.5):
        raise UnsupportedRegularizer("cg subsolver requires the half-squared loss")
    if ledger is None:
        ledger = model.ledger
    mu = model.mu
    x0 = model.base_point
    lin = model.lin

    g0 = model.grad_at_base()          # J^T c_k
    r = -g0
    if np.linalg.norm(r) == 0.0:
        return np.array(x0, copy=True), ApgReport(inner_iters=0, eta_final=mu,
                                                  residual_final=0.0)
    s = np.zeros_like(x0)
    p = r.copy()
    rs = float(np.dot(r, r))
    cap = max_iters if max_iters is not None else max(20, 4 * model.base_point.size)
    for it in range(1, cap + 1):
        Ap = lin.apply_jacobian_t(lin.apply_jacobian(p)) + mu * p
        alpha = rs / float(np.dot(p, Ap))
        s = s + alpha * p
        r = r - alpha * Ap
        rs_new = float(np.dot(r, r))
        # with g = 0 the model gradient at x0 + s is exactly -r
        if math.sqrt(rs_new) <= theta * mu * np.linalg.norm(s) + tol:
            x = x0 + s
            g = model.grad(x)          # exact recheck, guards residual drift
            resid = float(np.linalg.norm(g))
            if resid <= theta * mu * np.linalg.norm(s) + tol + 1e-12:
                return x, ApgReport(inner_iters=it, eta_final=mu,
                                    residual_final=resid)
            r = -g
            rs_new = float(np.dot(r, r))
            p = r.copy()
            rs = rs_new
            continue
        beta = rs_new / rs
        p = r + beta * p
        rs = rs_new
    report = ApgReport(inner_iters=cap, eta_final=mu,
                       residual_final=math.sqrt(rs))
    raise SubproblemStall("cg did not reach the subproblem certificate",
                          x0 + s, math.sqrt(rs), report)
