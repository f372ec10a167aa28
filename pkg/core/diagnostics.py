# Convergence quantities evaluated along a run: E+, the critical-point residual,
# potential functions, the majorizers of the x-step and rate-shape helpers.

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.fractional import varphi


@dataclass(frozen=True)
class CritPoint:
    """
    The six iterates {x+, x, y+, y, z+, z} plus the subgradient elements the
    solver selected while producing them.

    delta_subgradient comes from the prox optimality condition of the x-step,
    h_subgradient is an element of dh(y+) (beta (b - ybar) from the y-step).
    """
    x_next: np.ndarray
    x: np.ndarray
    y_next: np.ndarray
    y: np.ndarray
    z_next: np.ndarray
    z: np.ndarray
    delta_subgradient: np.ndarray
    g_subgradient: np.ndarray
    d_subgradient: np.ndarray
    h_subgradient: Optional[np.ndarray] = None


def e_plus(P, prev, nxt):
    """beta^t (||x+ - x|| + ||y+ - y|| + ||Ax+ - y+||) for consecutive states."""
    return prev.beta * (
        float(np.linalg.norm(nxt.x - prev.x))
        + float(np.linalg.norm(nxt.y - prev.y))
        + float(np.linalg.norm(P.A.apply(nxt.x) - nxt.y))
    )


def crit_residual(P, W):
    """Critical-point residual of the tuple W (an upper bound on the set distances)."""
    total = (np.linalg.norm(W.x_next - W.x) + np.linalg.norm(W.y_next - W.y)
             + np.linalg.norm(W.z_next - W.z) + np.linalg.norm(P.A.apply(W.x_next) - W.y_next))

    h_sub = W.h_subgradient
    if h_sub is None:
        h_sub = P.h.subgradient(W.y_next)
    total += np.linalg.norm(h_sub - W.z_next)

    ratio = varphi(P, W.x, W.y)
    stationarity = (W.delta_subgradient + P.f.gradient(W.x_next) - W.g_subgradient
                    + P.A.apply_adjoint(W.z_next) - ratio * W.d_subgradient)
    return float(total + np.linalg.norm(stationarity))


def surrogate_value(P, state, x):
    """
    The x-subproblem objective before majorization (h_mu(y^t) dropped):
    s(x) + delta(x) - g(x) - lambda d(x) for D-steps, or
    s(x) + delta(x) - g(x) - (2/alpha) sqrt(d(x)) for Q-steps.
    """
    if not P.delta.feasible(x):
        return math.inf
    r = P.A.apply(x) - state.y
    s = P.f.value(x) + float(r @ state.z) + 0.5 * state.beta * float(r @ r)
    base = s + P.delta.value(x) - P.g.value(x)
    if state.quadratic:
        return base - (2.0 / state.scalar) * math.sqrt(max(P.d.value(x), 0.0))
    return base - state.scalar * P.d.value(x)


def majorizer_value(P, state, step, x):
    """The majorizer of the x-step at x; touches surrogate_value at x = x^t."""
    if not P.delta.feasible(x):
        return math.inf
    dx = x - state.x
    quad = float(dx @ dx)
    smooth_curv = P.f.lipschitz + state.beta * P.A.op_norm ** 2

    r = P.A.apply(state.x) - state.y
    s0 = P.f.value(state.x) + float(r @ state.z) + 0.5 * state.beta * float(r @ r)
    value = P.delta.value(x) + s0 + float(dx @ step.grad_s) + 0.5 * smooth_curv * quad
    value += -P.g.value(state.x) - float(dx @ step.g_subgradient)
    if state.quadratic:
        anchor = math.sqrt(P.d.value(state.x))
    else:
        anchor = P.d.value(state.x)
    value += step.weight * (-anchor - float(dx @ step.d_direction)
                            + 0.5 * P.d.weak_convexity * quad)
    value += 0.5 * (step.curvature - step.ell) * quad
    return value


def potential(P, trace, variant=None):
    """
    Potential P^t = (L^t or K^t) + T^t + U^t reconstructed from a finished trace.

    The lower bound on d and the upper bound on alpha are estimated from the trace
    itself. Entries for t = 0 are NaN (T^0 is unbounded).
    """
    cfg = trace.config
    variant = variant or cfg.variant
    quadratic = str(variant).endswith("q")
    records = trace.step_records()
    if not records:
        return []
    c_h2 = P.h.lipschitz ** 2
    d_low = min(r.denominator for r in records)
    alpha_high = max(abs(r.scalar) for r in records) if quadratic else 0.0

    values = []
    for rec in records:
        if rec.t == 0:
            values.append(math.nan)
            continue
        if quadratic:
            t_term = 12.0 * alpha_high ** 2 * (1.0 + cfg.xi) * c_h2 / (cfg.beta0 * rec.t)
            u_term = 0.5 * alpha_high ** 2 * c_h2 * rec.mu
        else:
            t_term = 12.0 * (1.0 + cfg.xi) * c_h2 / (cfg.beta0 * d_low * rec.t)
            u_term = c_h2 * rec.mu / (2.0 * d_low)
        values.append(rec.LK + t_term + u_term)
    return values


def ergodic_mean(values, start=1):
    """Average of values[start:], i.e. (1/T) sum_{t=1}^T of a per-iteration series."""
    tail = np.asarray(values[start:], dtype=float)
    return float(np.mean(tail)) if tail.size else math.nan


def loglog_slope(ts, values):
    """Least-squares slope of log(values) against log(ts), ignoring non-positive entries."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (ts > 0) & (values > 0) & np.isfinite(values)
    if np.count_nonzero(keep) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(ts[keep]), np.log(values[keep]), 1)
    return float(slope)


def schedule_ratio_gap(cfg, t):
    """(mu^{t-1}/mu^t - 1)^2 - (6/t - 6/(t+1)); non-positive for t >= 1."""
    ratio = (1.0 + cfg.xi * t ** cfg.p) / (1.0 + cfg.xi * (t - 1) ** cfg.p)
    return (ratio - 1.0) ** 2 - (6.0 / t - 6.0 / (t + 1))
