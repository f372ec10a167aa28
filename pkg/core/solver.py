# Fractional ADMM (Dinkelbach and quadratic-transform flavors), the smoothed
# proximal gradient baseline (multiplier frozen at zero) and the projected
# subgradient baseline, all recording a Trace.

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from config.settings import (
    DEFAULT_BETA0, DEFAULT_MAX_ITER, DEFAULT_P, DEFAULT_THETA, DEFAULT_XI,
    DENOMINATOR_FLOOR, default_chi,
)
from core import diagnostics
from core.exceptions import NonFiniteIterateError, ParameterError, UnsupportedVariantError
from core.fractional import (
    K_value, U_value, denominator_value, numerator_value, objective,
    sqrt_denominator_subgradient,
)
from core.smoothing import prox_smoothed

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["t", "beta", "mu", "scalar", "objective", "U", "LK",
               "primal_residual", "e_plus", "crit", "flag", "wall_ms"]

DESCENT_TOL = 1e-9
INIT_RADIUS = 1e-12


class Variant(str, Enum):
    FADMM_D = "fadmm-d"
    FADMM_Q = "fadmm-q"
    SPGM_D = "spgm-d"
    SPGM_Q = "spgm-q"
    SPM = "spm"

    def __str__(self):
        return self.value

    @property
    def quadratic(self):
        return self in (Variant.FADMM_Q, Variant.SPGM_Q)

    @property
    def dual_updates(self):
        return self in (Variant.FADMM_D, Variant.FADMM_Q)


@dataclass(frozen=True)
class SolverConfig:
    xi: float = DEFAULT_XI
    theta: float = DEFAULT_THETA
    p: float = DEFAULT_P
    chi: Optional[float] = None
    beta0: float = DEFAULT_BETA0
    max_iter: int = DEFAULT_MAX_ITER
    variant: Variant = Variant.FADMM_D
    seed: int = 0
    record_diagnostics: bool = False
    max_seconds: Optional[float] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(str(self.variant).lower()))
        except ValueError:
            raise ParameterError("variant", self.variant,
                                 f"expected one of {[v.value for v in Variant]}") from None
        if self.chi is None:
            object.__setattr__(self, "chi", default_chi(self.xi))
        if not self.xi > 0:
            raise ParameterError("xi", self.xi, "must be positive")
        if not self.theta > 1:
            raise ParameterError("theta", self.theta, "must exceed 1")
        if not 0 < self.p < 1:
            raise ParameterError("p", self.p, "must lie in (0, 1)")
        if not self.chi > 2.0 * math.sqrt(1.0 + self.xi):
            raise ParameterError("chi", self.chi, f"must exceed 2*sqrt(1+xi) = {2.0 * math.sqrt(1.0 + self.xi):.6g}")
        if not self.beta0 > 0:
            raise ParameterError("beta0", self.beta0, "must be positive")
        if self.max_iter < 0:
            raise ParameterError("max_iter", self.max_iter, "must be non-negative")
        if self.max_seconds is not None and not self.max_seconds > 0:
            raise ParameterError("max_seconds", self.max_seconds, "must be positive")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class IterateState:
    """
    (x^t, y^t, z^t) with the schedule values of iteration t.

    scalar is lambda^t for Dinkelbach steps and alpha^{t+1} for quadratic-transform steps.
    """
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    t: int
    beta: float
    mu: float
    scalar: float = math.nan
    quadratic: bool = False
    ycheck: Optional[np.ndarray] = None


@dataclass(frozen=True)
class MajorizerStep:
    """Everything the x-step computed; reused by crit and the majorizer checks."""
    x: np.ndarray
    xprime: np.ndarray
    grad_s: np.ndarray
    g_subgradient: np.ndarray
    d_direction: np.ndarray
    weight: float
    ell: float
    curvature: float


@dataclass(frozen=True)
class StepResult:
    state: IterateState
    step: MajorizerStep
    x_next: np.ndarray
    y_next: np.ndarray
    ycheck: np.ndarray
    z_next: np.ndarray
    b: np.ndarray


@dataclass
class TraceRecord:
    t: int
    beta: float
    mu: float
    scalar: float
    objective: float
    U: float
    LK: float
    primal_residual: float
    e_plus: float = math.nan
    crit: float = math.nan
    flag: str = "ok"
    wall_ms: float = 0.0
    denominator: float = math.nan
    descent_gap: float = math.nan
    majorizer_drop: float = math.nan
    terminal: bool = False

    def csv_row(self):
        return {name: getattr(self, name) for name in CSV_COLUMNS}


@dataclass
class Trace:
    config: SolverConfig
    instance: str
    records: list = field(default_factory=list)
    final_x: Optional[np.ndarray] = None
    final_y: Optional[np.ndarray] = None
    final_z: Optional[np.ndarray] = None

    def step_records(self):
        return [r for r in self.records if not r.terminal]

    def to_frame(self, steps_only=True):
        rows = self.step_records() if steps_only else self.records
        return pd.DataFrame([r.csv_row() for r in rows], columns=CSV_COLUMNS)

    @property
    def final_objective(self):
        return self.records[-1].objective if self.records else math.nan

    @property
    def flag_count(self):
        return sum(1 for r in self.records if r.flag != "ok" and not r.terminal)


def schedule(cfg, t):
    """(beta^t, mu^t) = (beta0 (1 + xi t^p), chi / beta^t)."""
    if t < 0:
        raise ParameterError("t", t, "must be non-negative")
    beta = cfg.beta0 * (1.0 + cfg.xi * t ** cfg.p)
    return beta, cfg.chi / beta


def lambda_update(P, state):
    """lambda^t = U(x^t, y^t; z^t; beta^t, mu^t) / d(x^t)."""
    d = denominator_value(P, state.x)
    return U_value(P, state.x, state.y, state.z, state.beta, state.mu) / d


def alpha_update(P, state):
    """alpha^{t+1} = sqrt(d(x^t)) / U; inf when U is exactly zero."""
    d = denominator_value(P, state.x)
    u = U_value(P, state.x, state.y, state.z, state.beta, state.mu)
    if u == 0:
        return math.inf
    return math.sqrt(d) / u


def _majorizer_step(P, state, cfg, weight, direction):
    x = state.x
    grad_s = (P.f.gradient(x) + P.A.apply_adjoint(state.z)
              + state.beta * P.A.apply_adjoint(P.A.apply(x) - state.y))
    g_sub = P.g.subgradient(x)
    G = grad_s - g_sub - weight * direction

    base = P.f.lipschitz + state.beta * P.A.op_norm ** 2
    # a negative weight (flagged upstream) must not shrink the curvature
    ell = max(base + weight * P.d.weak_convexity, base)
    curvature = cfg.theta * ell
    xprime = x - G / curvature
    x_next = P.delta.prox(xprime, 1.0 / curvature)
    return MajorizerStep(x=x_next, xprime=xprime, grad_s=grad_s, g_subgradient=g_sub,
                         d_direction=direction, weight=weight, ell=ell, curvature=curvature)


def _dinkelbach_step(P, state, cfg):
    return _majorizer_step(P, state, cfg, state.scalar, P.d.subgradient(state.x))


def _quadratic_step(P, state, cfg):
    alpha = state.scalar
    weight = 0.0 if math.isinf(alpha) else 2.0 / alpha
    return _majorizer_step(P, state, cfg, weight, sqrt_denominator_subgradient(P, state.x))


def x_update_d(P, state, cfg):
    """Minimizer of the Dinkelbach majorizer at x^t (state.scalar = lambda^t)."""
    return _dinkelbach_step(P, state, cfg).x


def x_update_q(P, state, cfg):
    """Minimizer of the quadratic-transform majorizer at x^t (state.scalar = alpha^{t+1})."""
    return _quadratic_step(P, state, cfg).x


def _y_target(P, state, x_next):
    return P.A.apply(x_next) + state.z / state.beta


def y_update(P, state, x_next):
    """(y^{t+1}, ycheck^{t+1}) minimizing h_mu(y) + (beta/2)||y - Ax^{t+1} - z^t/beta||^2."""
    return prox_smoothed(P.h, state.mu, state.beta, _y_target(P, state, x_next))


def z_update(P, state, x_next, y_next):
    return state.z + state.beta * (P.A.apply(x_next) - y_next)


def initial_point(P, seed):
    """Standard Gaussian (x0, y0, z0) with x0 pulled onto dom(delta)."""
    rng = np.random.default_rng(seed)
    m = P.A.shape[0]
    x0 = rng.standard_normal(P.dim)
    y0 = rng.standard_normal(m)
    z0 = rng.standard_normal(m)
    return P.delta.prox(x0, INIT_RADIUS), y0, z0


def _check_finite(name, v, t):
    if not np.all(np.isfinite(v)):
        raise NonFiniteIterateError(name, t)


def _check_start(P, cfg, x0):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (P.dim,):
        raise ParameterError("x0", x0.shape, f"expected shape ({P.dim},)")
    if not P.delta.feasible(x0):
        raise ParameterError("x0", "infeasible", f"x0 must lie in dom(delta) of '{P.name}'")
    if cfg.variant.quadratic and not P.supports_quadratic_transform:
        raise UnsupportedVariantError(cfg.variant.value, P.name,
                                      "sqrt(d) is not known to be weakly convex")
    return x0.copy()


def iterate_admm(P, cfg, x0, y0, z0, dual_updates=True):
    """
    Yields one StepResult per iteration t = 0 .. max_iter - 1.

    With dual_updates False the multiplier is held at zero (smoothed proximal gradient).
    Assumption checks are left to the caller.
    """
    x = _check_start(P, cfg, x0)
    y = np.array(y0, dtype=float, copy=True)
    z = np.array(z0, dtype=float, copy=True) if dual_updates else np.zeros(P.A.shape[0])
    quadratic = cfg.variant.quadratic

    for t in range(cfg.max_iter):
        beta, mu = schedule(cfg, t)
        state = IterateState(x=x, y=y, z=z, t=t, beta=beta, mu=mu, quadratic=quadratic)
        if quadratic:
            state = dataclasses.replace(state, scalar=alpha_update(P, state))
            step = _quadratic_step(P, state, cfg)
        else:
            state = dataclasses.replace(state, scalar=lambda_update(P, state))
            step = _dinkelbach_step(P, state, cfg)
        x_next = step.x
        _check_finite("x", x_next, t)

        b = _y_target(P, state, x_next)
        y_next, ycheck = prox_smoothed(P.h, mu, beta, b)
        _check_finite("y", y_next, t)
        if dual_updates:
            z_next = z_update(P, state, x_next, y_next)
            _check_finite("z", z_next, t)
        else:
            z_next = np.zeros_like(z)

        yield StepResult(state=dataclasses.replace(state, ycheck=ycheck), step=step, x_next=x_next,
                         y_next=y_next, ycheck=ycheck, z_next=z_next, b=b)
        x, y, z = x_next, y_next, z_next


def _assumption_flags(P, res, d_value):
    flags = []
    if d_value < DENOMINATOR_FLOOR:
        flags.append("d_floor")
    scalar = res.state.scalar
    if res.state.quadratic:
        if not scalar > 0:
            flags.append("u_nonpositive")
    elif not scalar > 0:
        flags.append("lambda_nonpositive")
    return flags


def _descent_gap(P, res):
    s = res.state
    if s.quadratic:
        if math.isinf(s.scalar):
            return math.nan, math.nan
        before = K_value(P, s.scalar, s.x, s.y, s.z, s.beta, s.mu)
        after = K_value(P, s.scalar, res.x_next, s.y, s.z, s.beta, s.mu)
    else:
        before = s.scalar
        after = U_value(P, res.x_next, s.y, s.z, s.beta, s.mu) / denominator_value(P, res.x_next)
    return after - before, before


def _crit_point(P, res):
    s, step = res.state, res.step
    if s.quadratic:
        d_sub = 2.0 * math.sqrt(P.d.value(s.x)) * step.d_direction
    else:
        d_sub = step.d_direction
    return diagnostics.CritPoint(
        x_next=res.x_next, x=s.x, y_next=res.ycheck, y=s.y, z_next=res.z_next, z=s.z,
        delta_subgradient=step.curvature * (step.xprime - res.x_next),
        g_subgradient=step.g_subgradient, d_subgradient=d_sub,
        h_subgradient=s.beta * (res.b - res.y_next),
    )


def _record_from_step(P, cfg, res, prev_alpha, started):
    s = res.state
    d_value = denominator_value(P, s.x)
    u = U_value(P, s.x, s.y, s.z, s.beta, s.mu)
    if s.quadratic:
        # K^t uses alpha^t; at t = 0 alpha^1 stands in
        lk = K_value(P, prev_alpha if prev_alpha is not None else s.scalar, s.x, s.y, s.z, s.beta, s.mu)
    else:
        lk = s.scalar
    flags = _assumption_flags(P, res, d_value)

    nxt = IterateState(x=res.x_next, y=res.y_next, z=res.z_next, t=s.t + 1, beta=s.beta, mu=s.mu)
    rec = TraceRecord(
        t=s.t, beta=s.beta, mu=s.mu, scalar=s.scalar, objective=objective(P, s.x), U=u, LK=lk,
        primal_residual=float(np.linalg.norm(P.A.apply(s.x) - s.y)),
        e_plus=diagnostics.e_plus(P, s, nxt), denominator=d_value,
    )
    if cfg.record_diagnostics:
        rec.crit = diagnostics.crit_residual(P, _crit_point(P, res))
        gap, ref = _descent_gap(P, res)
        rec.descent_gap = gap
        if gap > DESCENT_TOL * max(1.0, abs(ref)):
            flags.append("descent_violation")
        rec.majorizer_drop = (diagnostics.majorizer_value(P, s, res.step, res.x_next)
                              - diagnostics.majorizer_value(P, s, res.step, s.x))
    rec.flag = ";".join(flags) if flags else "ok"
    rec.wall_ms = (time.perf_counter() - started) * 1000.0
    return rec


def _terminal_record(P, cfg, t, x, y, z, last_alpha, started):
    beta, mu = schedule(cfg, t)
    d_value = denominator_value(P, x)
    u = U_value(P, x, y, z, beta, mu)
    if cfg.variant.quadratic:
        scalar = math.sqrt(d_value) / u if u != 0 else math.inf
        lk = K_value(P, last_alpha if last_alpha is not None else scalar, x, y, z, beta, mu)
    else:
        scalar = lk = u / d_value
    return TraceRecord(
        t=t, beta=beta, mu=mu, scalar=scalar, objective=objective(P, x), U=u, LK=lk,
        primal_residual=float(np.linalg.norm(P.A.apply(x) - y)), denominator=d_value,
        flag="terminal", terminal=True, wall_ms=(time.perf_counter() - started) * 1000.0,
    )


def _notify(log_callback, message):
    logger.info(message)
    if log_callback:
        log_callback(message)


def _out_of_time(cfg, started):
    return cfg.max_seconds is not None and time.perf_counter() - started >= cfg.max_seconds


def _run_splitting(P, cfg, x0, y0, z0, dual_updates, log_callback=None, progress_callback=None):
    started = time.perf_counter()
    trace = Trace(config=cfg, instance=P.name)
    _notify(log_callback, f"Running {cfg.variant} on '{P.name}' (T={cfg.max_iter}, beta0={cfg.beta0:g})")

    x, y, z = np.asarray(x0, dtype=float), np.asarray(y0, dtype=float), np.asarray(z0, dtype=float)
    if not dual_updates:
        z = np.zeros(P.A.shape[0])
    prev_alpha = None
    for res in iterate_admm(P, cfg, x0, y0, z0, dual_updates=dual_updates):
        rec = _record_from_step(P, cfg, res, prev_alpha, started)
        if rec.flag != "ok":
            logger.debug("t=%d flagged: %s", rec.t, rec.flag)
        trace.records.append(rec)
        x, y, z = res.x_next, res.y_next, res.z_next
        prev_alpha = res.state.scalar if cfg.variant.quadratic else None
        if progress_callback:
            progress_callback(res.state.t + 1, cfg.max_iter)
        if _out_of_time(cfg, started):
            _notify(log_callback, f"Wall-clock budget of {cfg.max_seconds:g}s reached at t={res.state.t + 1}")
            break

    trace.records.append(_terminal_record(P, cfg, len(trace.records), x, y, z, prev_alpha, started))
    trace.final_x, trace.final_y, trace.final_z = x, y, z
    _finish(trace, log_callback)
    return trace


def _finish(trace, log_callback):
    if trace.flag_count:
        logger.warning("%s on '%s': %d iteration(s) flagged an assumption violation",
                       trace.config.variant, trace.instance, trace.flag_count)
    _notify(log_callback, f"Finished {trace.config.variant}: F = {trace.final_objective:.6g} "
                          f"after {len(trace.step_records())} iteration(s)")


def run(P, cfg, x0, y0=None, z0=None, log_callback=None, progress_callback=None):
    """
    Runs the configured variant from (x0, y0, z0) and returns its Trace.

    Missing y0 defaults to Ax0 and missing z0 to zero. The trace holds one record per
    completed iteration followed by a terminal record for the last iterate.
    """
    if cfg.variant is Variant.SPM:
        return run_spm(P, cfg, x0, log_callback=log_callback, progress_callback=progress_callback)
    x0 = np.asarray(x0, dtype=float)
    if y0 is None:
        y0 = P.A.apply(x0)
    if z0 is None:
        z0 = np.zeros(P.A.shape[0])
    return _run_splitting(P, cfg, x0, y0, z0, cfg.variant.dual_updates, log_callback, progress_callback)


def run_spgm(P, cfg, x0, y0=None, log_callback=None, progress_callback=None):
    """The splitting loop with the multiplier held at zero; cfg.variant picks the D or Q flavor."""
    if cfg.variant.dual_updates:
        cfg = cfg.replace(variant=Variant.SPGM_Q if cfg.variant.quadratic else Variant.SPGM_D)
    x0 = np.asarray(x0, dtype=float)
    if y0 is None:
        y0 = P.A.apply(x0)
    return _run_splitting(P, cfg, x0, y0, np.zeros(P.A.shape[0]), False, log_callback, progress_callback)


def spm_direction(P, x):
    """Quotient-rule subgradient (xi_u d - u xi_d) / d^2 with selected elements."""
    u = numerator_value(P, x)
    d = denominator_value(P, x)
    xi_u = P.f.gradient(x) - P.g.subgradient(x) + P.A.apply_adjoint(P.h.subgradient(P.A.apply(x)))
    if P.delta.subgradient is not None:
        xi_u = xi_u + P.delta.subgradient(x)
    return (xi_u * d - u * P.d.subgradient(x)) / (d * d)


def run_spm(P, cfg, x0, log_callback=None, progress_callback=None):
    """Projected subgradient descent on F with step 1/beta^t."""
    if P.delta.project is None:
        raise UnsupportedVariantError("spm", P.name, "delta has no projection onto its domain")
    if P.h.subgradient is None:
        raise UnsupportedVariantError("spm", P.name, "h exposes no subgradient")
    if cfg.variant is not Variant.SPM:
        cfg = cfg.replace(variant=Variant.SPM)
    x = _check_start(P, cfg, x0)
    started = time.perf_counter()
    trace = Trace(config=cfg, instance=P.name)
    _notify(log_callback, f"Running spm on '{P.name}' (T={cfg.max_iter}, beta0={cfg.beta0:g})")

    for t in range(cfg.max_iter):
        beta, mu = schedule(cfg, t)
        d_value = denominator_value(P, x)
        u = numerator_value(P, x)
        x_next = P.delta.project(x - spm_direction(P, x) / beta)
        _check_finite("x", x_next, t)
        step = float(np.linalg.norm(x_next - x))
        rec = TraceRecord(
            t=t, beta=beta, mu=mu, scalar=u / d_value, objective=u / d_value, U=u, LK=u / d_value,
            primal_residual=0.0,
            e_plus=beta * (step + float(np.linalg.norm(P.A.apply(x_next - x)))),
            denominator=d_value,
            flag="d_floor" if d_value < DENOMINATOR_FLOOR else "ok",
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        trace.records.append(rec)
        x = x_next
        if progress_callback:
            progress_callback(t + 1, cfg.max_iter)
        if _out_of_time(cfg, started):
            _notify(log_callback, f"Wall-clock budget of {cfg.max_seconds:g}s reached at t={t + 1}")
            break

    t_end = len(trace.records)
    beta, mu = schedule(cfg, t_end)
    value = objective(P, x)
    d_value = denominator_value(P, x)
    trace.records.append(TraceRecord(
        t=t_end, beta=beta, mu=mu, scalar=value, objective=value, U=value * d_value, LK=value,
        primal_residual=0.0, denominator=d_value, flag="terminal", terminal=True,
        wall_ms=(time.perf_counter() - started) * 1000.0,
    ))
    trace.final_x, trace.final_y, trace.final_z = x, P.A.apply(x), np.zeros(P.A.shape[0])
    _finish(trace, log_callback)
    return trace
