import math

import numpy as np
import pytest

import proxlm as px
from proxlm.verify import check_membership, fit_terminal_order


# ---------------------------------------------------------------------------
# proximal gradient


def test_pg_exact_quadratic_one_step():
    # c = identity, h = half-squared: gradient step with L=1 jumps to zero
    p = px.make_linear_ls(np.eye(1), np.zeros(1))
    x, trace = px.pg_solve(p, np.array([1.0]),
                           px.PgConfig(l_min=1.0, epsilon=1e-12))
    assert x[0] == 0.0
    assert trace.status is px.Status.STATIONARY
    assert px.rho_backtrack_count(trace) == 0  # acceptance holds with equality


def test_pg_stationary_start():
    p = px.make_rosenbrock(2)
    x, trace = px.pg_solve(p, np.ones(2), px.PgConfig())
    assert len(trace.records) == 1
    assert trace.status is px.Status.STATIONARY


def test_pg_monotone_objective_and_growing_stepweight():
    p = px.make_rosenbrock(2)
    x, trace = px.pg_solve(p, np.zeros(2),
                           px.PgConfig(l_min=1e-2, epsilon=1e-4,
                                       max_iters=50_000))
    F = trace.column("F")
    assert all(b <= a for a, b in zip(F[:-1], F[1:]))
    L = trace.column("rho")
    assert all(b >= a for a, b in zip(L[:-1], L[1:]))


def test_pg_backtrack_bound_with_known_constant():
    # affine residual: grad H is (A^T A)-Lipschitz with constant sigma^2
    p = px.random_linear_ls(10, 6, seed=21)
    L_H = p.extras["sigma"] ** 2
    alpha = 2.0
    l_min = L_H / alpha ** 3
    x, trace = px.pg_solve(p, np.ones(6),
                           px.PgConfig(l_min=l_min, alpha=alpha,
                                       epsilon=1e-9, max_iters=20_000))
    assert trace.status is px.Status.STATIONARY
    increases = px.rho_backtrack_count(trace)
    assert increases <= math.ceil(math.log(L_H / l_min, alpha)) + 1
    assert trace.records[-1].rho <= alpha * L_H


def test_pg_respects_domain():
    toy = px.make_toy_interval()
    x, trace = px.pg_solve(toy, np.array([0.5]),
                           px.PgConfig(l_min=1.0, epsilon=1e-10,
                                       max_iters=2000))
    assert all(-1.0 <= r.x[0] <= 1.0 for r in trace.records)
    assert trace.records[-1].F == pytest.approx(1.0, abs=1e-12)


def test_pg_costlier_than_lm_on_rosenbrock():
    p = px.make_rosenbrock(2)
    target = 1e-4
    _, tr_lm = px.lm_solve(p, np.zeros(2), px.LmConfig(epsilon=1e-8))
    _, tr_pg = px.pg_solve(p, np.zeros(2),
                           px.PgConfig(l_min=1e-2, epsilon=1e-8,
                                       max_iters=200_000))
    cost_lm = next(r.oracle_cost for r in tr_lm.records if r.F <= target)
    cost_pg = next(r.oracle_cost for r in tr_pg.records if r.F <= target)
    assert tr_pg.records[-1].F <= target
    assert cost_lm < cost_pg


# ---------------------------------------------------------------------------
# fixed-damping variant


def test_dp_first_step_solves_toy_model(toy_quadratic):
    conf = px.DpConfig(mu_fixed=2.0, L=16.0, epsilon=1e-8, max_iters=1,
                       apg=px.ApgConfig(theta=1e-6))
    x, trace = px.dp_solve(toy_quadratic, np.array([2.0]), conf)
    first_step = trace.records[1].x
    assert first_step[0] == pytest.approx(14.0 / 9.0, abs=1e-6)


def test_dp_certificates_hold():
    p = px.make_rosenbrock(2)
    conf = px.DpConfig(mu_fixed=0.5, L=1e3, epsilon=1e-8, max_iters=2000)
    x, trace = px.dp_solve(p, np.zeros(2), conf)
    assert trace.status is px.Status.STATIONARY
    res = check_membership(p, trace, conf.theta)
    assert res.passed, res.detail


def test_dp_mu_column_is_constant():
    p = px.make_rosenbrock(2)
    x, trace = px.dp_solve(p, np.zeros(2),
                           px.DpConfig(mu_fixed=0.25, L=100.0,
                                       epsilon=1e-6, max_iters=500))
    mus = {r.mu for r in trace.records if r.mu > 0}
    assert mus == {0.25}


def test_dp_terminal_order_is_linear_not_quadratic():
    p = px.make_rosenbrock(2)
    _, tr_dp = px.dp_solve(p, np.zeros(2),
                           px.DpConfig(mu_fixed=1e-2, L=1e3, epsilon=1e-12,
                                       max_iters=5000),
                           cost_budget=2e5)
    order_dp = fit_terminal_order(tr_dp.column("delta"))
    _, tr_lm = px.lm_solve(p, np.zeros(2), px.LmConfig(epsilon=1e-12))
    order_lm = fit_terminal_order(tr_lm.column("delta"))
    assert order_dp is not None and order_dp <= 1.3, order_dp
    assert order_lm is not None and order_lm >= 1.7, order_lm


def test_dp_budget_and_stall_statuses():
    p = px.make_rosenbrock(2)
    _, trace = px.dp_solve(p, np.zeros(2),
                           px.DpConfig(mu_fixed=1.0, L=1.0), cost_budget=0)
    assert trace.status is px.Status.BUDGET_EXHAUSTED
    _, trace = px.dp_solve(p, np.zeros(2),
                           px.DpConfig(mu_fixed=1e-4, L=1e-4,
                                       max_inner_iters=3))
    assert trace.status is px.Status.SUBPROBLEM_STALL
