import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import proxlm as px


# ---------------------------------------------------------------------------
# momentum coefficient recurrence


def test_momentum_step_from_zero():
    b_next, tau = px.momentum_step(0.0, 1.0, 2.0)
    assert b_next == pytest.approx(1.0)
    assert tau == pytest.approx(1.0)


def test_momentum_step_closed_form():
    # b=1, mu=1, eta=2: b_next = (5 + sqrt(17))/2, tau = 2(b_next-1)/(3 b_next - 1)
    b_next, tau = px.momentum_step(1.0, 1.0, 2.0)
    expected_b = (5.0 + math.sqrt(17.0)) / 2.0
    expected_tau = 2.0 * (expected_b - 1.0) / (3.0 * expected_b - 1.0)
    assert b_next == pytest.approx(expected_b, rel=1e-15)
    assert b_next == pytest.approx(4.56155, abs=5e-6)
    assert tau == pytest.approx(expected_tau, rel=1e-15)
    assert tau == pytest.approx(0.56155, abs=5e-5)


def test_momentum_step_rejects_bad_parameters():
    with pytest.raises(px.ParameterDomain):
        px.momentum_step(0.0, 2.0, 2.0)   # eta == mu
    with pytest.raises(px.ParameterDomain):
        px.momentum_step(0.0, 3.0, 2.0)   # eta < mu
    with pytest.raises(px.ParameterDomain):
        px.momentum_step(-1.0, 1.0, 2.0)


@settings(max_examples=200)
@given(b=st.floats(0.0, 1e8),
       mu=st.floats(1e-9, 1e4),
       ratio=st.floats(1.0 + 1e-6, 1e6))
def test_momentum_step_ranges(b, mu, ratio):
    eta = mu * ratio
    b_next, tau = px.momentum_step(b, mu, eta)
    assert b_next > b
    assert 0.0 <= tau <= 1.0 + 1e-12
    # the z-update mixing weight mu*phi is a convex-combination coefficient
    phi = (b_next - b) / (1.0 + mu * b_next)
    assert 0.0 <= mu * phi <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# curvature acceptance test


def test_backtrack_accepts_zero_step(toy_quadratic):
    model = px.linearize(toy_quadratic, np.array([2.0]), 2.0)
    y = np.array([1.8])
    assert px.backtrack_condition(model, y, y, 1e-9)


def test_backtrack_equality_at_exact_curvature(toy_quadratic):
    # model curvature is J^2 + mu = 16 + 2 = 18 everywhere
    model = px.linearize(toy_quadratic, np.array([2.0]), 2.0)
    y = np.array([1.9])
    x_next = np.array([1.4])
    gy = model.grad(y)
    d = x_next - y
    lhs = model.value(x_next)
    rhs = model.value(y) + float(gy @ d) + 0.5 * 18.0 * float(d @ d)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert px.backtrack_condition(model, y, x_next, 18.0 * (1 + 1e-9))


def test_backtrack_rejects_small_curvature(toy_quadratic):
    model = px.linearize(toy_quadratic, np.array([2.0]), 2.0)
    eta = 2.0 * (1.0 + 1e-6)
    y = np.array([2.0])
    x_next = y - model.grad(y) / eta
    assert not px.backtrack_condition(model, y, x_next, eta)


# ---------------------------------------------------------------------------
# accelerated subproblem solver


def test_apg_stationary_base_terminates_immediately():
    p = px.make_rosenbrock(2)
    led = px.OracleLedger()
    model = px.linearize(p, np.ones(2), 0.5, led)  # grad at base is zero
    x_out, report = px.apg_solve(model, p.regularizer, px.ApgConfig(), led)
    np.testing.assert_array_equal(x_out, np.ones(2))
    assert report.inner_iters == 1
    assert report.residual_final == 0.0


def test_apg_toy_model_reaches_exact_minimizer(toy_quadratic):
    led = px.OracleLedger()
    model = px.linearize(toy_quadratic, np.array([2.0]), 2.0, led)
    x_out, report = px.apg_solve(model, toy_quadratic.regularizer,
                                 px.ApgConfig(theta=1e-6), led)
    assert x_out[0] == pytest.approx(14.0 / 9.0, abs=1e-6)
    assert report.eta_final > model.mu


def test_apg_certificate_reverified_post_hoc():
    rng = np.random.default_rng(0)
    cases = [
        (px.make_rosenbrock(6), rng.uniform(-1.5, 1.5, 6), 0.7),
        (px.make_nmf(5, 4, 2, 1e-3, 10, seed=1),
         np.abs(rng.standard_normal(18)), 0.2),
        (px.make_toy_interval(), np.array([0.5]), 2.0),
    ]
    for problem, x_k, mu in cases:
        theta = 0.5
        model = px.linearize(problem, x_k, mu)
        x_out, report = px.apg_solve(model, problem.regularizer,
                                     px.ApgConfig(theta=theta))
        step = np.linalg.norm(x_out - x_k)
        assert report.residual_final <= theta * mu * step
        omega_bar = px.stationarity(problem, x_out, model.grad(x_out))
        assert omega_bar <= theta * mu * step + 1e-10


def test_apg_eta_stays_below_curvature_ceiling():
    p = px.random_linear_ls(15, 10, seed=6)
    x_k = np.random.default_rng(7).standard_normal(10)
    mu = 0.05
    model = px.linearize(p, x_k, mu)
    _, report = px.apg_solve(model, p.regularizer, px.ApgConfig())
    sigma = p.extras["sigma"]
    alpha_bar = 2.0
    assert report.eta_max <= alpha_bar * (mu + sigma ** 2) * (1 + 1e-12)


def test_apg_quadratic_optimality_against_direct_solve():
    for seed, (n, d) in [(1, (12, 8)), (2, (30, 20))]:
        p = px.random_linear_ls(n, d, seed=seed)
        A, b = p.extras["A"], p.extras["b"]
        rng = np.random.default_rng(seed + 50)
        x_k = rng.standard_normal(d)
        mu = 0.7
        model = px.linearize(p, x_k, mu)
        x_out, _ = px.apg_solve(model, p.regularizer, px.ApgConfig(theta=1e-8))
        direct = x_k + np.linalg.solve(A.T @ A + mu * np.eye(d),
                                       -A.T @ (A @ x_k - b))
        np.testing.assert_allclose(x_out, direct, atol=1e-6)


def test_apg_stall_carries_best_iterate():
    p = px.random_linear_ls(20, 15, seed=3, sigma=30.0)
    x_k = np.random.default_rng(4).standard_normal(15)
    model = px.linearize(p, x_k, 1e-4)
    with pytest.raises(px.SubproblemStall) as exc:
        px.apg_solve(model, p.regularizer,
                     px.ApgConfig(theta=1e-10, max_inner_iters=5))
    assert exc.value.report.inner_iters == 5
    assert exc.value.best_point.shape == (15,)


def test_apg_check_interval_skips_certificates():
    p = px.random_linear_ls(10, 8, seed=5)
    x_k = np.zeros(8)
    model = px.linearize(p, x_k, 0.5)
    x1, r1 = px.apg_solve(model, p.regularizer, px.ApgConfig())
    model2 = px.linearize(p, x_k, 0.5)
    x7, r7 = px.apg_solve(model2, p.regularizer, px.ApgConfig(check_interval=7))
    assert r7.inner_iters % 7 == 0
    step = np.linalg.norm(x7 - x_k)
    assert r7.residual_final <= 0.5 * 0.5 * step


# ---------------------------------------------------------------------------
# conjugate gradient alternative


def test_cg_solves_one_dimensional_model_in_one_iteration(toy_quadratic):
    model = px.linearize(toy_quadratic, np.array([2.0]), 2.0)
    x_out, report = px.cg_solve(model, toy_quadratic.regularizer, theta=1e-8)
    assert x_out[0] == pytest.approx(14.0 / 9.0, rel=1e-12)
    assert report.inner_iters == 1


def test_cg_returns_base_when_already_optimal():
    p = px.make_rosenbrock(2)
    model = px.linearize(p, np.ones(2), 1.0)
    x_out, report = px.cg_solve(model, p.regularizer)
    np.testing.assert_array_equal(x_out, np.ones(2))
    assert report.inner_iters == 0


def test_cg_matches_direct_solve_on_random_system():
    rng = np.random.default_rng(14)
    A = rng.standard_normal((5, 5)) + 3.0 * np.eye(5)
    b = rng.standard_normal(5)
    p = px.make_linear_ls(A, b)
    x_k = rng.standard_normal(5)
    mu = 2.0
    model = px.linearize(p, x_k, mu)
    x_out, _ = px.cg_solve(model, p.regularizer, theta=1e-9)
    direct = x_k + np.linalg.solve(A.T @ A + mu * np.eye(5),
                                   -A.T @ (A @ x_k - b))
    np.testing.assert_allclose(x_out, direct, atol=1e-8)


def test_cg_charges_one_product_pair_per_iteration():
    p = px.random_linear_ls(10, 8, seed=15)
    led = px.OracleLedger()
    model = px.linearize(p, np.zeros(8), 0.5, led)
    jvp0, vjp0 = led.jvp_apply, led.vjp_apply
    _, report = px.cg_solve(model, p.regularizer, led, theta=1e-6)
    # one pair per iteration plus the final exact gradient recheck
    assert led.jvp_apply - jvp0 == report.inner_iters + 1
    assert led.vjp_apply - vjp0 == report.inner_iters + 2


def test_cg_rejects_wrong_structure(toy_quadratic):
    toy_interval = px.make_toy_interval()
    model = px.linearize(toy_interval, np.array([0.5]), 1.0)
    with pytest.raises(px.UnsupportedRegularizer):
        px.cg_solve(model, toy_interval.regularizer)
    model2 = px.linearize(toy_quadratic, np.array([2.0]), 1.0)
    with pytest.raises(px.UnsupportedRegularizer):
        px.cg_solve(model2, px.BoxIndicator(0, 1))


# ---------------------------------------------------------------------------
# inner-iteration scaling with the damped condition number


def _conditioned_instance(kappa_bar: float, mu: float, n=60, d=40, seed=5):
    sigma = math.sqrt((kappa_bar - 1.0) * mu)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    U, _, Vt = np.linalg.svd(A, full_matrices=False)
    sv = np.linspace(0.1 * sigma, sigma, d)[::-1]
    return px.make_linear_ls((U * sv) @ Vt, rng.standard_normal(n))


def test_inner_iterations_scale_like_sqrt_kappa():
    mu = 1.0
    kappas = [10.0, 100.0, 1000.0]
    iters = []
    for kap in kappas:
        p = _conditioned_instance(kap, mu)
        model = px.linearize(p, np.zeros(p.dim_x), mu)
        _, report = px.apg_solve(model, p.regularizer, px.ApgConfig())
        iters.append(report.inner_iters)
    logs_k = np.log(kappas)
    logs_i = np.log(iters)
    dx = logs_k - logs_k.mean()
    slope = float(np.dot(dx, logs_i - logs_i.mean()) / np.dot(dx, dx))
    assert 0.3 <= slope <= 0.7, (iters, slope)
