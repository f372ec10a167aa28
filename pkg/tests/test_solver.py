import math

import numpy as np
import pandas as pd
import pytest

from config.settings import DEFAULT_CHI
from core import diagnostics
from core.applications import build_fda, build_recovery, build_srm
from core.exceptions import NonFiniteIterateError, ParameterError, UnsupportedVariantError
from core.fractional import (
    Denominator, ProblemComponents, ProxTerm, SmoothTerm, objective, unconstrained, zero_convex,
)
from core.linalg import IdentityOperator
from core.prox import prox_orthogonality
from core.smoothing import l1_norm, smooth_grad
from core.solver import (
    IterateState, SolverConfig, Variant, alpha_update, initial_point, iterate_admm, lambda_update,
    run, run_spgm, run_spm, schedule, x_update_d, x_update_q, y_update, z_update,
)


def toy_problem(d_const=1.0, h_scale=0.0, project=True):
    """1-D: f = x^2 + 1, h = h_scale |.|, d constant."""
    delta = unconstrained() if project else ProxTerm(prox=lambda x, r: x.copy(), feasible=lambda x: True)
    return ProblemComponents(
        name="toy", dim=1,
        f=SmoothTerm(value=lambda x: float(x @ x) + 1.0, gradient=lambda x: 2.0 * x, lipschitz=2.0),
        delta=delta, g=zero_convex(), h=l1_norm(1, h_scale), A=IdentityOperator(1),
        d=Denominator(value=lambda x: d_const, subgradient=np.zeros_like, lipschitz=0.0,
                      sqrt_weakly_convex=True),
    )


def state(x, y, z, t=0, beta=1.0, mu=1.0, scalar=math.nan, quadratic=False):
    arr = lambda v: np.array([v], dtype=float)
    return IterateState(x=arr(x), y=arr(y), z=arr(z), t=t, beta=beta, mu=mu, scalar=scalar, quadratic=quadratic)


@pytest.fixture
def fda(tall_dataset):
    _, P = build_fda(tall_dataset, r=2, rho=1.0)
    return P


def test_schedule_examples():
    cfg = SolverConfig()
    assert schedule(cfg, 0) == (1.0, DEFAULT_CHI)
    beta, mu = schedule(cfg, 8)
    assert beta == pytest.approx(3.0)
    assert mu == pytest.approx(DEFAULT_CHI / 3.0)
    assert schedule(cfg, 1)[0] == 2.0


def test_schedule_growth_bounds():
    cfg = SolverConfig(xi=0.5, beta0=3.0)
    for t in range(500):
        b0, b1 = schedule(cfg, t)[0], schedule(cfg, t + 1)[0]
        assert b0 <= b1 <= (1.0 + cfg.xi) * b0


def test_schedule_rejects_negative_t():
    with pytest.raises(ParameterError):
        schedule(SolverConfig(), -1)


def test_smoothing_ratio_bound():
    cfg = SolverConfig()
    assert all(diagnostics.schedule_ratio_gap(cfg, t) <= 0.0 for t in range(1, 100001))


def test_config_defaults_and_validation():
    cfg = SolverConfig(variant="FADMM-Q")
    assert cfg.variant is Variant.FADMM_Q
    assert cfg.chi == pytest.approx(2.0 * math.sqrt(2.0) + 1e-5)
    assert (cfg.xi, cfg.theta, cfg.p) == (1.0, 1.01, pytest.approx(1.0 / 3.0))
    with pytest.raises(ParameterError):
        SolverConfig(chi=2.0 * math.sqrt(2.0))
    with pytest.raises(ParameterError):
        SolverConfig(theta=1.0)
    with pytest.raises(ParameterError):
        SolverConfig(variant="newton")


def test_lambda_and_alpha_updates():
    P = toy_problem(d_const=1.0)
    s = state(1.0, 1.0, 0.0)
    assert lambda_update(P, s) == pytest.approx(2.0)
    assert alpha_update(P, s) == pytest.approx(0.5)


def test_x_update_d_hand_step():
    P = toy_problem(d_const=1.0)
    s = state(1.0, 1.0, 0.0, scalar=2.0)
    # gradient 2, curvature theta * (L_f + beta ||A||^2) = 1.01 * 3
    np.testing.assert_allclose(x_update_d(P, s, SolverConfig()), [1.0 - 2.0 / 3.03])


def test_x_update_fixed_point():
    P = toy_problem()
    cfg = SolverConfig()
    np.testing.assert_array_equal(x_update_d(P, state(0.0, 0.0, 0.0, scalar=1.0), cfg), [0.0])
    np.testing.assert_array_equal(x_update_q(P, state(0.0, 0.0, 0.0, scalar=1.0, quadratic=True), cfg), [0.0])


def test_y_update_example():
    P = toy_problem(h_scale=1.0)
    y, ycheck = y_update(P, state(0.0, 0.0, 0.0), np.array([2.0]))
    np.testing.assert_allclose(y, [1.0])
    np.testing.assert_allclose(ycheck, [0.0])


def test_z_update_consensus_and_arithmetic():
    P = toy_problem()
    s = state(0.0, 0.0, 0.25, beta=2.0)
    np.testing.assert_array_equal(z_update(P, s, np.array([1.0]), np.array([1.0])), [0.25])
    np.testing.assert_allclose(z_update(P, s, np.array([1.5]), np.array([1.0])), [1.25])


def test_e_plus_hand_arithmetic():
    P = toy_problem()
    prev = state(0.0, 0.0, 0.0, beta=2.0)
    nxt = state(1.0, 0.5, 0.0)
    assert diagnostics.e_plus(P, prev, nxt) == pytest.approx(4.0)


def test_crit_is_zero_at_critical_point():
    P = toy_problem(d_const=2.0)
    zero = np.zeros(1)
    W = diagnostics.CritPoint(x_next=zero, x=zero, y_next=zero, y=zero, z_next=zero, z=zero,
                              delta_subgradient=zero, g_subgradient=zero, d_subgradient=zero)
    assert diagnostics.crit_residual(P, W) == 0.0


def test_zero_iterations_gives_terminal_record_only(fda):
    x0, y0, z0 = initial_point(fda, 0)
    trace = run(fda, SolverConfig(max_iter=0, beta0=100.0), x0, y0, z0)
    assert len(trace.records) == 1 and trace.records[0].terminal
    frame = trace.to_frame()
    assert list(frame.columns) == ["t", "beta", "mu", "scalar", "objective", "U", "LK",
                                   "primal_residual", "e_plus", "crit", "flag", "wall_ms"]
    assert frame.empty


def test_run_rejects_infeasible_start(fda):
    with pytest.raises(ParameterError):
        run(fda, SolverConfig(max_iter=1), np.ones(fda.dim))


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_fadmm_improves_fda(fda, variant):
    x0, y0, z0 = initial_point(fda, 1)
    cfg = SolverConfig(max_iter=200, beta0=100.0, variant=variant)
    trace = run(fda, cfg, x0, y0, z0)
    steps = trace.step_records()
    assert len(steps) == 200 and [r.t for r in trace.records] == list(range(201))
    assert trace.final_objective <= steps[0].objective
    assert trace.records[-1].primal_residual < steps[0].primal_residual
    assert objective(fda, trace.final_x) == pytest.approx(trace.final_objective)


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_multiplier_identity_and_bound(fda, variant):
    x0, y0, z0 = initial_point(fda, 2)
    cfg = SolverConfig(max_iter=40, beta0=100.0, variant=variant)
    z_bar = max(np.linalg.norm(z0), fda.h.lipschitz)
    for res in iterate_admm(fda, cfg, x0, y0, z0):
        s = res.state
        gap = np.linalg.norm(res.z_next - smooth_grad(fda.h, s.mu, res.y_next))
        assert gap <= 1e-10 * max(1.0, np.linalg.norm(res.z_next))
        assert np.linalg.norm(res.z_next) <= z_bar + 1e-9
        assert np.linalg.norm(res.y_next - res.ycheck) <= s.mu * fda.h.lipschitz + 1e-10


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_x_step_descends(fda, variant):
    x0, y0, z0 = initial_point(fda, 3)
    cfg = SolverConfig(max_iter=60, beta0=100.0, variant=variant, record_diagnostics=True)
    trace = run(fda, cfg, x0, y0, z0)
    for rec in trace.step_records():
        if "nonpositive" in rec.flag:
            continue
        assert "descent_violation" not in rec.flag
        assert rec.majorizer_drop <= 1e-9 * max(1.0, abs(rec.LK))
        assert math.isfinite(rec.crit)


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_majorizer_dominates_surrogate(fda, rng, variant):
    x0, y0, z0 = initial_point(fda, 4)
    cfg = SolverConfig(max_iter=30, beta0=100.0, variant=variant)
    for res in iterate_admm(fda, cfg, x0, y0, z0):
        if res.state.t % 10 or not res.state.scalar > 0:
            continue
        s, step = res.state, res.step
        at_x = diagnostics.majorizer_value(fda, s, step, s.x)
        assert at_x == pytest.approx(diagnostics.surrogate_value(fda, s, s.x), rel=1e-12, abs=1e-12)
        for _ in range(20):
            candidate = prox_orthogonality(rng.standard_normal(fda.dim), 12, 2)
            scale = max(1.0, abs(at_x))
            assert diagnostics.majorizer_value(fda, s, step, candidate) >= \
                diagnostics.surrogate_value(fda, s, candidate) - 1e-9 * scale


def test_runs_are_deterministic(fda):
    x0, y0, z0 = initial_point(fda, 5)
    cfg = SolverConfig(max_iter=25, beta0=100.0, record_diagnostics=True)
    a = run(fda, cfg, x0, y0, z0).to_frame().drop(columns="wall_ms")
    b = run(fda, cfg, x0, y0, z0).to_frame().drop(columns="wall_ms")
    pd.testing.assert_frame_equal(a, b)


def test_spgm_is_run_with_zero_multiplier(fda):
    x0, y0, z0 = initial_point(fda, 6)
    cfg = SolverConfig(max_iter=20, beta0=100.0, variant="spgm-d")
    via_run = run(fda, cfg, x0, y0, z0).to_frame().drop(columns="wall_ms")
    direct = run_spgm(fda, cfg.replace(variant="fadmm-d"), x0, y0).to_frame().drop(columns="wall_ms")
    pd.testing.assert_frame_equal(via_run, direct)


def test_potential_components(fda):
    x0, y0, z0 = initial_point(fda, 7)
    trace = run(fda, SolverConfig(max_iter=30, beta0=100.0), x0, y0, z0)
    values = diagnostics.potential(fda, trace)
    assert len(values) == 30 and math.isnan(values[0])
    assert all(math.isfinite(v) for v in values[1:])
    # the potential minus L is the sum of two decreasing sequences
    extra = [v - r.LK for v, r in zip(values[1:], trace.step_records()[1:])]
    assert all(b < a for a, b in zip(extra, extra[1:]))


def test_quadratic_transform_rejected_for_recovery(small_dataset):
    _, P = build_recovery(small_dataset, rho1=10.0, rho2=1.0)
    x0, y0, z0 = initial_point(P, 0)
    with pytest.raises(UnsupportedVariantError):
        run(P, SolverConfig(max_iter=5, variant="fadmm-q"), x0, y0, z0)


def test_spm_requires_projection():
    P = toy_problem(project=False)
    with pytest.raises(UnsupportedVariantError):
        run_spm(P, SolverConfig(max_iter=3), np.zeros(1))


def test_spm_flat_objective_keeps_iterate():
    P = ProblemComponents(
        name="flat", dim=2,
        f=SmoothTerm(value=lambda x: 1.0, gradient=np.zeros_like, lipschitz=0.0),
        delta=unconstrained(), g=zero_convex(), h=l1_norm(2, 0.0), A=IdentityOperator(2),
        d=Denominator(value=lambda x: 2.0, subgradient=np.zeros_like, lipschitz=0.0),
    )
    x0 = np.array([0.3, -0.4])
    trace = run_spm(P, SolverConfig(max_iter=5, variant="spm"), x0)
    np.testing.assert_array_equal(trace.final_x, x0)
    assert all(r.objective == 0.5 for r in trace.records)


def test_spm_hand_steps():
    P = toy_problem(d_const=2.0)
    cfg = SolverConfig(max_iter=3, beta0=2.0, variant="spm")
    trace = run_spm(P, cfg, np.array([1.0]))
    # F = (x^2 + 1)/2 has gradient x, so x <- x (1 - 1/beta^t)
    x = 1.0
    for t, rec in enumerate(trace.step_records()):
        assert rec.objective == pytest.approx((x * x + 1.0) / 2.0)
        x *= 1.0 - 1.0 / schedule(cfg, t)[0]
    assert trace.final_x[0] == pytest.approx(x)


def test_spm_runs_on_composite_recovery(small_dataset):
    _, P = build_recovery(small_dataset, rho1=10.0, rho2=1.0)
    x0, _, _ = initial_point(P, 0)
    trace = run(P, SolverConfig(max_iter=10, variant="spm", beta0=1.0), x0)
    assert len(trace.step_records()) == 10
    assert all(r.primal_residual == 0.0 for r in trace.records)


def test_srm_variants_run(small_dataset):
    _, P = build_srm(small_dataset, p_count=5, seed=1)
    x0, y0, z0 = initial_point(P, 0)
    for variant in ("fadmm-d", "fadmm-q", "spgm-q"):
        trace = run(P, SolverConfig(max_iter=15, beta0=0.01, variant=variant), x0, y0, z0)
        assert P.delta.feasible(trace.final_x)
        assert math.isfinite(trace.final_objective)


def test_non_finite_iterate_raises():
    P = ProblemComponents(
        name="blowup", dim=1,
        f=SmoothTerm(value=lambda x: 1.0, gradient=lambda x: np.array([np.inf]), lipschitz=1.0),
        delta=unconstrained(), g=zero_convex(), h=l1_norm(1, 0.0), A=IdentityOperator(1),
        d=Denominator(value=lambda x: 1.0, subgradient=np.zeros_like, lipschitz=0.0),
    )
    with pytest.raises(NonFiniteIterateError):
        run(P, SolverConfig(max_iter=2), np.zeros(1))


def test_callbacks_are_called(fda):
    messages, progress = [], []
    x0, y0, z0 = initial_point(fda, 0)
    run(fda, SolverConfig(max_iter=3, beta0=100.0), x0, y0, z0,
        log_callback=messages.append, progress_callback=lambda c, t: progress.append((c, t)))
    assert progress == [(1, 3), (2, 3), (3, 3)]
    assert messages and messages[0].startswith("Running fadmm-d")


def test_wall_clock_budget_stops_early(fda):
    x0, y0, z0 = initial_point(fda, 0)
    trace = run(fda, SolverConfig(max_iter=10 ** 7, beta0=100.0, max_seconds=0.05), x0, y0, z0)
    assert 1 <= len(trace.step_records()) < 10 ** 7
    assert trace.records[-1].terminal
