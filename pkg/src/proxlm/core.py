"""Problem oracles, cost accounting, linearization, and stationarity measures.

A composite objective F(x) = g(x) + h(c(x)) is accessed only through oracles:
residual evaluation c(x), matrix-free Jacobian products u -> J u and
v -> J^T v at a frozen base point, loss value/gradient of h, and the proximal
map of g.  Every oracle call is charged to an :class:`OracleLedger` so solver
comparisons can be made in weighted oracle cost rather than wall time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np


class NumericalFailure(RuntimeError):
    """An oracle returned a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, copy=True)


class UnsupportedRegularizer(ValueError):
    """The operation needs a closed-form subdifferential the regularizer lacks."""


class ParameterDomain(ValueError):
    """A numeric parameter is outside its admissible range."""


# ---------------------------------------------------------------------------
# oracle ledger


ORACLE_WEIGHTS = {
    "residual_eval": 1,
    "linearize": 2,
    "transpose_derive": 0,
    "jvp_apply": 1,
    "vjp_apply": 1,
    "loss_eval": 0,
    "loss_grad": 0,
    "prox_apply": 0,
}


@dataclass
class OracleLedger:
    """Per-oracle call counters plus the incrementally maintained weighted cost."""

    residual_eval: int = 0
    linearize: int = 0
    transpose_derive: int = 0
    jvp_apply: int = 0
    vjp_apply: int = 0
    loss_eval: int = 0
    loss_grad: int = 0
    prox_apply: int = 0
    weighted_cost: int = 0

    def charge(self, kind: str, n: int = 1) -> None:
        setattr(self, kind, getattr(self, kind) + n)
        self.weighted_cost += ORACLE_WEIGHTS[kind] * n

    def counts(self) -> dict:
        return {k: getattr(self, k) for k in ORACLE_WEIGHTS}


def ledger_cost(ledger: OracleLedger) -> int:
    """Weighted cost recomputed from the raw counters.

    Residual evaluations and Jacobian-vector products cost 1 unit each,
    building the forward linear map costs 2, deriving its transpose and all
    g/h oracles are free.  Must agree exactly with ``ledger.weighted_cost``.
    """
    return sum(ORACLE_WEIGHTS[k] * getattr(ledger, k) for k in ORACLE_WEIGHTS)


def _charge(ledger: Optional[OracleLedger], kind: str, n: int = 1) -> None:
    if ledger is not None:
        ledger.charge(kind, n)


# ---------------------------------------------------------------------------
# outer losses h


@dataclass(frozen=True)
class QuadraticLoss:
    """h(y) = scale * ||y||^2, with infimum 0 and gradient Lipschitz 2*scale.

    ``scale=0.5`` gives the least-squares loss h = 0.5*||.||^2 (Lipschitz 1).
    """

    scale: float = 0.5

    def value(self, y: np.ndarray) -> float:
        return self.scale * float(np.dot(y, y))

    def grad(self, y: np.ndarray) -> np.ndarray:
        return (2.0 * self.scale) * y

    @property
    def infimum(self) -> float:
        return 0.0

    @property
    def grad_lipschitz(self) -> float:
        return 2.0 * self.scale


# ---------------------------------------------------------------------------
# regularizers g
#
# Each regularizer exposes value(x), prox(x, s), infimum, and (for separable
# g) subdiff_dist(x, v) = dist(v, subdifferential of g at x), computed
# coordinatewise in closed form.  prox uses an explicit quadratic weight:
# prox(x, s) = argmin_z { g(z) + (s/2) ||z - x||^2 }.


class ZeroRegularizer:
    """g identically zero."""

    infimum = 0.0

    def value(self, x: np.ndarray) -> float:
        return 0.0

    def prox(self, x: np.ndarray, s: float) -> np.ndarray:
        return np.array(x, copy=True)

    def subdiff_dist(self, x: np.ndarray, v: np.ndarray) -> float:
        return float(np.linalg.norm(v))


class BoxIndicator:
    """Indicator of the box {x : lower <= x <= upper} (bounds may be infinite).

    The prox is the Euclidean projection (clipping), independent of the
    weight.  The subdifferential is the normal cone of the box, which is
    separable: (-inf, 0] at an active lower bound, [0, inf) at an active
    upper bound, {0} in the interior.
    """

    infimum = 0.0

    def __init__(self, lower=-np.inf, upper=np.inf):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ParameterDomain("box has lower > upper")

    def value(self, x: np.ndarray) -> float:
        if np.all(x >= self.lower) and np.all(x <= self.upper):
            return 0.0
        return np.inf

    def prox(self, x: np.ndarray, s: float) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def subdiff_dist(self, x: np.ndarray, v: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        lo = np.broadcast_to(self.lower, x.shape)
        hi = np.broadcast_to(self.upper, x.shape)
        if np.any(x < lo) or np.any(x > hi):
            raise ParameterDomain("point outside the box domain")
        at_lo = x <= lo
        at_hi = x >= hi
        # distance to the per-coordinate normal cone
        d = np.abs(v)
        d = np.where(at_lo, np.maximum(v, 0.0), d)
        d = np.where(at_hi, np.maximum(-v, 0.0), d)
        d = np.where(at_lo & at_hi, 0.0, d)  # pinned coordinate: cone is all of R
        return float(np.linalg.norm(d))


def nonnegative_orthant() -> BoxIndicator:
    return BoxIndicator(0.0, np.inf)


class L1Regularizer:
    """g(x) = lam * ||x||_1 with the soft-thresholding prox."""

    infimum = 0.0

    def __init__(self, lam: float):
        if lam <= 0:
            raise ParameterDomain("l1 weight must be positive")
        self.lam = float(lam)

    def value(self, x: np.ndarray) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, x: np.ndarray, s: float) -> np.ndarray:
        t = self.lam / s
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    def subdiff_dist(self, x: np.ndarray, v: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        at_zero = x == 0.0
        d = np.where(at_zero,
                     np.maximum(np.abs(v) - self.lam, 0.0),
                     np.abs(v - self.lam * np.sign(x)))
        return float(np.linalg.norm(d))


# ---------------------------------------------------------------------------
# problem bundle


@dataclass(frozen=True)
class CompositeProblem:
    """Oracle bundle for min_x g(x) + h(c(x)).

    ``residual`` maps R^dim_x -> R^dim_r.  ``jvp_at(x)`` returns the pair of
    pure linear maps (u -> J u, v -> J^T v) with J the Jacobian of the
    residual frozen at x; accounting happens in the wrapper layer, not here.
    ``lipschitz_jac`` is the Jacobian Lipschitz constant when known
    analytically (synthetic instances only).
    """

    dim_x: int
    dim_r: int
    residual: Callable[[np.ndarray], np.ndarray]
    jvp_at: Callable[[np.ndarray], tuple]
    outer_loss: Any
    regularizer: Any
    lipschitz_jac: Optional[float] = None
    name: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def objective_offset(self) -> float:
        """Known global lower bound g* + h*."""
        return self.regularizer.infimum + self.outer_loss.infimum


def _eval_residual(problem: CompositeProblem, x: np.ndarray,
                   ledger: Optional[OracleLedger]) -> np.ndarray:
    c = problem.residual(x)
    _charge(ledger, "residual_eval")
    if not np.all(np.isfinite(c)):
        raise NumericalFailure("residual is non-finite", point=x)
    return c


def eval_objective(problem: CompositeProblem, x: np.ndarray,
                   ledger: Optional[OracleLedger] = None) -> float:
    """F(x) = g(x) + h(c(x)); returns +inf outside dom g."""
    f, _ = objective_with_residual(problem, x, ledger)
    return f


def objective_with_residual(problem: CompositeProblem, x: np.ndarray,
                            ledger: Optional[OracleLedger] = None):
    """F(x) together with the residual c(x), so callers can reuse it."""
    gval = problem.regularizer.value(x)
    if not np.isfinite(gval):
        return np.inf, None
    c = _eval_residual(problem, x, ledger)
    hval = problem.outer_loss.value(c)
    _charge(ledger, "loss_eval")
    if not np.isfinite(hval):
        raise NumericalFailure("loss value is non-finite", point=x)
    return gval + hval, c


# ---------------------------------------------------------------------------
# linearization


class Linearization:
    """Residual linearization frozen at a base point, with oracle accounting.

    Caches the last linearized residual c(x_k) + J (x - x_k) so that value
    and gradient evaluations at the same point share one forward product.
    """

    def __init__(self, base_point, residual_at_base, jvp, vjp, loss, ledger):
        self.base_point = np.asarray(base_point, dtype=float)
        self.residual_at_base = np.asarray(residual_at_base, dtype=float)
        self._jvp = jvp
        self._vjp = vjp
        self.loss = loss
        self.ledger = ledger
        self._cache_x = None
        self._cache_w = None

    def apply_jacobian(self, u: np.ndarray) -> np.ndarray:
        _charge(self.ledger, "jvp_apply")
        return self._jvp(u)

    def apply_jacobian_t(self, v: np.ndarray) -> np.ndarray:
        _charge(self.ledger, "vjp_apply")
        return self._vjp(v)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Linearized residual at x; one jvp unless x was just evaluated."""
        if self._cache_x is not None and x is self._cache_x:
            return self._cache_w
        if self._cache_x is not None and np.array_equal(x, self._cache_x):
            return self._cache_w
        w = self.residual_at_base + self.apply_jacobian(x - self.base_point)
        self._cache_x = np.array(x, copy=True)
        self._cache_w = w
        return w

    def grad_at_base(self) -> np.ndarray:
        """Gradient of h(c(.)) linearized at the base, i.e. J^T grad h(c(x_k))."""
        _charge(self.ledger, "loss_grad")
        return self.apply_jacobian_t(self.loss.grad(self.residual_at_base))

    def damped(self, mu: float) -> "LinearizedModel":
        if mu <= 0:
            raise ParameterDomain("damping must be positive")
        return LinearizedModel(self, float(mu))


class LinearizedModel:
    """Damped model: h(c(x_k) + J (x - x_k)) + (mu/2) ||x - x_k||^2."""

    def __init__(self, linearization: Linearization, mu: float):
        self.lin = linearization
        self.mu = mu

    @property
    def base_point(self) -> np.ndarray:
        return self.lin.base_point

    @property
    def residual_at_base(self) -> np.ndarray:
        return self.lin.residual_at_base

    @property
    def loss(self):
        return self.lin.loss

    @property
    def ledger(self):
        return self.lin.ledger

    def value(self, x: np.ndarray) -> float:
        w = self.lin.forward(x)
        _charge(self.ledger, "loss_eval")
        d = x - self.base_point
        return self.loss.value(w) + 0.5 * self.mu * float(np.dot(d, d))

    def grad(self, x: np.ndarray) -> np.ndarray:
        w = self.lin.forward(x)
        _charge(self.ledger, "loss_grad")
        d = x - self.base_point
        return self.lin.apply_jacobian_t(self.loss.grad(w)) + self.mu * d

    def grad_at_base(self) -> np.ndarray:
        return self.lin.grad_at_base()

    def with_damping(self, mu: float) -> "LinearizedModel":
        """Same linearization (no new oracle charges), different damping."""
        return self.lin.damped(mu)


def linearize_base(problem: CompositeProblem, x_k: np.ndarray,
                   ledger: Optional[OracleLedger] = None,
                   residual: Optional[np.ndarray] = None) -> Linearization:
    """Freeze c and its Jacobian operators at x_k, charging the ledger.

    ``residual`` lets the caller pass an already evaluated c(x_k) so the
    residual oracle is not charged twice for the same point.
    """
    x_k = np.asarray(x_k, dtype=float)
    if residual is None:
        residual = _eval_residual(problem, x_k, ledger)
    jvp, vjp = problem.jvp_at(x_k)
    _charge(ledger, "linearize")
    _charge(ledger, "transpose_derive")
    return Linearization(x_k, residual, jvp, vjp, problem.outer_loss, ledger)


def linearize(problem: CompositeProblem, x_k: np.ndarray, mu: float,
              ledger: Optional[OracleLedger] = None,
              residual: Optional[np.ndarray] = None) -> LinearizedModel:
    """Damped linearized model at x_k with damping mu > 0."""
    return linearize_base(problem, x_k, ledger, residual).damped(mu)


def grad_smooth_part(problem: CompositeProblem, x: np.ndarray,
                     ledger: Optional[OracleLedger] = None,
                     model: Optional[LinearizedModel] = None) -> np.ndarray:
    """Gradient of the smooth part H(x) = h(c(x)), i.e. J(x)^T grad h(c(x)).

    Reuses an existing linearization at x when one is supplied.
    """
    if model is not None and np.array_equal(model.base_point, x):
        return model.grad_at_base()
    lin = linearize_base(problem, x, ledger)
    return lin.grad_at_base()


def stationarity(problem: CompositeProblem, x: np.ndarray,
                 grad_h: np.ndarray) -> float:
    """First-order stationarity: distance from -grad_h to the subdifferential of g.

    Requires a separable regularizer with a closed-form subdifferential
    distance; raises :class:`UnsupportedRegularizer` otherwise (callers may
    fall back to :func:`prox_gradient_residual`).
    """
    reg = problem.regularizer
    dist = getattr(reg, "subdiff_dist", None)
    if dist is None:
        raise UnsupportedRegularizer(
            "no closed-form subdifferential distance for this regularizer")
    return dist(x, -np.asarray(grad_h))


def prox_gradient_residual(problem: CompositeProblem, x: np.ndarray,
                           grad_h: np.ndarray, weight: float,
                           ledger: Optional[OracleLedger] = None) -> float:
    """Scaled prox-gradient fixed-point residual s*||x - prox(x - grad/s, s)||.

    Surrogate stationarity measure for regularizers without a closed-form
    subdifferential distance.
    """
    z = problem.regularizer.prox(x - grad_h / weight, weight)
    _charge(ledger, "prox_apply")
    return weight * float(np.linalg.norm(x - z))


# ---------------------------------------------------------------------------
# diagnostics used by tests and the verification suite


def adjoint_error(problem: CompositeProblem, x: np.ndarray,
                  u: np.ndarray, v: np.ndarray) -> float:
    """Normalized adjoint mismatch |<Ju, v> - <u, J^T v>| / (1 + ||u|| ||v||)."""
    jvp, vjp = problem.jvp_at(np.asarray(x, dtype=float))
    lhs = float(np.dot(jvp(u), v))
    rhs = float(np.dot(u, vjp(v)))
    return abs(lhs - rhs) / (1.0 + np.linalg.norm(u) * np.linalg.norm(v))


def operator_norm(jvp, vjp, dim: int, iters: int = 80, seed: int = 0) -> float:
    """Largest singular value of the Jacobian operator via power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = vjp(jvp(v))
        n = np.linalg.norm(w)
        if n == 0.0:
            return 0.0
        v = w / n
    return float(np.sqrt(np.dot(v, vjp(jvp(v)))))
