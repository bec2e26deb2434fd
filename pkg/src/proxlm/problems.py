"""Bundled benchmark instances with hand-coded Jacobian-product oracles.

All instances report known infima g* = h* = 0 and pass the adjoint and
finite-difference self-checks in :func:`finite_diff_check`.
"""

from __future__ import annotations

import numpy as np

from .core import (
    BoxIndicator,
    CompositeProblem,
    ParameterDomain,
    QuadraticLoss,
    ZeroRegularizer,
    adjoint_error,
    nonnegative_orthant,
    operator_norm,
)

_SQRT2 = np.sqrt(2.0)


def make_rosenbrock(d: int) -> CompositeProblem:
    """Least-squares form of the d-dimensional Rosenbrock function.

    Residuals are scaled so that 0.5*||c(x)||^2 equals the textbook
    objective sum_i (x_i - 1)^2 + 100 (x_{i+1} - x_i^2)^2:
    c_{2i} = sqrt(2) (x_i - 1), c_{2i+1} = 10 sqrt(2) (x_{i+1} - x_i^2).
    """
    if d < 2:
        raise ParameterDomain("rosenbrock needs d >= 2")
    a = _SQRT2
    b = 10.0 * _SQRT2

    def residual(x):
        x = np.asarray(x, dtype=float)
        r = np.empty(2 * (d - 1))
        r[0::2] = a * (x[:-1] - 1.0)
        r[1::2] = b * (x[1:] - x[:-1] ** 2)
        return r

    def jvp_at(x):
        xb = np.array(x, dtype=float, copy=True)

        def jvp(u):
            out = np.empty(2 * (d - 1))
            out[0::2] = a * u[:-1]
            out[1::2] = b * (u[1:] - 2.0 * xb[:-1] * u[:-1])
            return out

        def vjp(v):
            g = np.zeros(d)
            g[:-1] += a * v[0::2] - 2.0 * b * xb[:-1] * v[1::2]
            g[1:] += b * v[1::2]
            return g

        return jvp, vjp

    return CompositeProblem(
        dim_x=d,
        dim_r=2 * (d - 1),
        residual=residual,
        jvp_at=jvp_at,
        outer_loss=QuadraticLoss(0.5),
        regularizer=ZeroRegularizer(),
        lipschitz_jac=2.0 * b,
        name=f"rosenbrock{d}",
    )


def make_toy_interval() -> CompositeProblem:
    """One-dimensional instance: h(y) = y^2, c(x) = x^2 - 2, g = indicator of [-1, 1].

    The minimum of (x^2 - 2)^2 over [-1, 1] sits at x = +-1 with value 1,
    attained in finitely many solver iterations (sharp growth).  Note the
    loss is y^2, not 0.5 y^2, so its gradient Lipschitz constant is 2.
    """

    def residual(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return x * x - 2.0

    def jvp_at(x):
        xb = float(np.atleast_1d(x)[0])

        def jvp(u):
            return 2.0 * xb * np.atleast_1d(u)

        def vjp(v):
            return 2.0 * xb * np.atleast_1d(v)

        return jvp, vjp

    return CompositeProblem(
        dim_x=1,
        dim_r=1,
        residual=residual,
        jvp_at=jvp_at,
        outer_loss=QuadraticLoss(1.0),
        regularizer=BoxIndicator(-1.0, 1.0),
        lipschitz_jac=2.0,
        name="toy_interval",
    )


def make_linear_ls(A, b, box=None) -> CompositeProblem:
    """Affine residual c(x) = A x - b with half-squared loss.

    The Jacobian is constant, so any positive Jacobian-Lipschitz bound is
    valid; the exact largest singular value is stored in ``extras['sigma']``
    (computed once by power iteration, used only by tests).  ``box`` adds an
    optional box-indicator regularizer (pair of bounds).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n, d = A.shape
    if b.shape != (n,):
        raise ParameterDomain("b must have length A.shape[0]")

    def residual(x):
        return A @ x - b

    def jvp_at(x):
        def jvp(u):
            return A @ u

        def vjp(v):
            return A.T @ v

        return jvp, vjp

    reg = BoxIndicator(*box) if box is not None else ZeroRegularizer()
    sigma = operator_norm(lambda u: A @ u, lambda v: A.T @ v, d)
    return CompositeProblem(
        dim_x=d,
        dim_r=n,
        residual=residual,
        jvp_at=jvp_at,
        outer_loss=QuadraticLoss(0.5),
        regularizer=reg,
        lipschitz_jac=0.0,
        name=f"linear_ls_{n}x{d}",
        extras={"A": A, "b": b, "sigma": sigma},
    )


def random_linear_ls(n: int, d: int, seed: int = 0, sigma: float | None = None,
                     box=None) -> CompositeProblem:
    """Random well-conditioned affine instance; optionally rescaled so the
    largest singular value equals ``sigma`` exactly."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    if sigma is not None:
        s = np.linalg.svd(A, compute_uv=False)
        A *= sigma / s[0]
    b = rng.standard_normal(n)
    return make_linear_ls(A, b, box=box)


def make_nmf(p: int, q: int, r: int, lam: float, N: int, seed: int,
             noise: float = 0.0) -> CompositeProblem:
    """Synthetic nonnegative matrix factorization on N sampled entries.

    Variables are x = vec(U, V) with U (p x r) and V (q x r), constrained to
    the nonnegative orthant.  Observed values s_t = <u*_i, v*_j> + noise for
    planted nonnegative factors U*, V*.  Residuals sqrt(2/N)(<u_i, v_j> - s_t)
    plus, for lam > 0, a ridge block sqrt(2*lam)*x, so that
    0.5*||c(x)||^2 = mean squared error + lam*(||U||_F^2 + ||V||_F^2).
    """
    if not (1 <= r <= min(p, q)):
        raise ParameterDomain("need 1 <= r <= min(p, q)")
    if not (1 <= N <= p * q):
        raise ParameterDomain("need 1 <= N <= p*q")
    if lam < 0:
        raise ParameterDomain("ridge weight must be nonnegative")

    rng = np.random.default_rng(seed)
    U_true = rng.uniform(0.0, 1.0, size=(p, r))
    V_true = rng.uniform(0.0, 1.0, size=(q, r))
    flat = rng.choice(p * q, size=N, replace=False)
    ii = flat // q
    jj = flat % q
    s = np.einsum("tr,tr->t", U_true[ii], V_true[jj])
    if noise > 0.0:
        s = s + noise * rng.standard_normal(N)

    dim_x = (p + q) * r
    ridge = lam > 0.0
    dim_r = N + (dim_x if ridge else 0)
    scale = np.sqrt(2.0 / N)
    rscale = np.sqrt(2.0 * lam) if ridge else 0.0

    def split(x):
        return x[: p * r].reshape(p, r), x[p * r:].reshape(q, r)

    def residual(x):
        x = np.asarray(x, dtype=float)
        U, V = split(x)
        fit = scale * (np.einsum("tr,tr->t", U[ii], V[jj]) - s)
        if not ridge:
            return fit
        return np.concatenate([fit, rscale * x])

    def jvp_at(x):
        xb = np.array(x, dtype=float, copy=True)
        Ub, Vb = split(xb)
        Ui, Vj = Ub[ii], Vb[jj]

        def jvp(u):
            dU, dV = split(np.asarray(u, dtype=float))
            fit = scale * (np.einsum("tr,tr->t", dU[ii], Vj)
                           + np.einsum("tr,tr->t", Ui, dV[jj]))
            if not ridge:
                return fit
            return np.concatenate([fit, rscale * u])

        def vjp(v):
            v = np.asarray(v, dtype=float)
            vf = scale * v[:N]
            gU = np.zeros((p, r))
            gV = np.zeros((q, r))
            np.add.at(gU, ii, vf[:, None] * Vj)
            np.add.at(gV, jj, vf[:, None] * Ui)
            g = np.concatenate([gU.ravel(), gV.ravel()])
            if ridge:
                g += rscale * v[N:]
            return g

        return jvp, vjp

    return CompositeProblem(
        dim_x=dim_x,
        dim_r=dim_r,
        residual=residual,
        jvp_at=jvp_at,
        outer_loss=QuadraticLoss(0.5),
        regularizer=nonnegative_orthant(),
        name=f"nmf_{p}x{q}_r{r}",
        extras={"factors": (U_true, V_true), "indices": (ii, jj), "values": s,
                "shape": (p, q, r)},
    )


def nmf_gaussian_init(problem: CompositeProblem, seed: int = 0) -> np.ndarray:
    """Standard small Gaussian start, entries |N(0, 1e-3)| (folded to stay
    inside the nonnegative orthant)."""
    rng = np.random.default_rng(seed)
    return np.abs(rng.normal(0.0, np.sqrt(1e-3), size=problem.dim_x))


def default_start(problem: CompositeProblem, seed: int = 0) -> np.ndarray:
    """Conventional starting point for each bundled instance."""
    name = problem.name
    if name.startswith("rosenbrock"):
        if problem.dim_x == 2:
            return np.zeros(2)
        return np.full(problem.dim_x, 0.5)
    if name == "toy_interval":
        return np.array([0.5])
    if name.startswith("nmf"):
        return nmf_gaussian_init(problem, seed)
    return np.zeros(problem.dim_x)


def finite_diff_check(problem: CompositeProblem, x, directions=5,
                      seed: int = 0) -> float:
    """Max relative error of the JVP against central differences, plus the
    adjoint identity, at a single point.

    ``directions`` is either a count of random unit directions or an explicit
    list of direction vectors.  The step is 1e-6*(1 + ||x||_inf).
    """
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    if isinstance(directions, int):
        dirs = []
        for _ in range(directions):
            u = rng.standard_normal(problem.dim_x)
            dirs.append(u / np.linalg.norm(u))
    else:
        dirs = [np.asarray(u, dtype=float) for u in directions]

    jvp, vjp = problem.jvp_at(x)
    step = 1e-6 * (1.0 + np.linalg.norm(x, np.inf))
    worst = 0.0
    for u in dirs:
        fd = (problem.residual(x + step * u) - problem.residual(x - step * u)) \
            / (2.0 * step)
        an = jvp(u)
        worst = max(worst, np.linalg.norm(fd - an) / (1.0 + np.linalg.norm(an)))
        v = rng.standard_normal(problem.dim_r)
        worst = max(worst, adjoint_error(problem, x, u, v))
    return float(worst)
