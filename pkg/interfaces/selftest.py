# Brute-force checks of the closed-form prox operators on small random instances.
# The same oracles back the test-suite.

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from core.prox import (
    project_simplex, prox_generalized_max, prox_l1_box, prox_orthogonality, soft_threshold,
)

logger = logging.getLogger(__name__)

GAP_TOL = 1e-6
SCALAR_XATOL = 1e-10


@dataclass
class SelftestResult:
    name: str
    trials: int
    worst_gap: float

    @property
    def passed(self):
        return self.worst_gap <= GAP_TOL


def _scalar_min(fun, lo, hi):
    res = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": SCALAR_XATOL})
    # the bounded search never evaluates the endpoints themselves
    return min(res.fun, fun(lo), fun(hi))


def l1_box_oracle(xprime, mu, rho2, rho0):
    """Coordinate-wise minimum of (x - x')^2/(2 mu) + rho2 |x| over |x| <= rho0."""
    total = 0.0
    for xp in xprime:
        lo, hi = (-rho0, rho0) if np.isfinite(rho0) else (-abs(xp) - 1.0, abs(xp) + 1.0)
        fun = lambda v: (v - xp) ** 2 / (2.0 * mu) + rho2 * abs(v)
        # kinks at 0 are where the bounded search is weakest
        total += min(_scalar_min(fun, lo, 0.0), _scalar_min(fun, 0.0, hi))
    return total


def l1_box_objective(x, xprime, mu, rho2):
    return float(np.sum((x - xprime) ** 2) / (2.0 * mu) + rho2 * np.sum(np.abs(x)))


def simplex_oracle(xprime):
    """Smallest squared distance to the simplex by enumerating supports."""
    n = xprime.size
    best = np.inf
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            tau = (np.sum(xprime[idx]) - 1.0) / size
            p = np.zeros(n)
            p[idx] = xprime[idx] - tau
            if np.all(p >= 0):
                best = min(best, float(np.sum((p - xprime) ** 2)))
    return best


def generalized_max_oracle(xprime, mu, b):
    """min_c max(0, c) + sum max(v'_j - c, 0)^2 / (2 mu), v' = x' + b (a convex 1-D problem)."""
    vprime = xprime + b
    fun = lambda c: max(0.0, c) + float(np.sum(np.maximum(vprime - c, 0.0) ** 2)) / (2.0 * mu)
    lo = float(np.min(vprime)) - mu - 1.0
    hi = float(np.max(vprime)) + 1.0
    return min(_scalar_min(fun, lo, 0.0), _scalar_min(fun, 0.0, hi)) if lo < 0 < hi else _scalar_min(fun, lo, hi)


def generalized_max_objective(x, xprime, mu, b):
    return float(np.sum((x - xprime) ** 2) / (2.0 * mu) + max(0.0, float(np.max(x + b))))


def _check_soft_threshold(rng, trials):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        xprime, tau = 3.0 * rng.standard_normal(n), float(rng.uniform(0.0, 2.0))
        got = l1_box_objective(soft_threshold(xprime, tau), xprime, 1.0, tau)
        worst = max(worst, got - l1_box_oracle(xprime, 1.0, tau, np.inf))
    return SelftestResult("soft_threshold", trials, worst)


def _check_l1_box(rng, trials):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        xprime = 3.0 * rng.standard_normal(n)
        mu, rho2 = float(rng.uniform(0.05, 2.0)), float(rng.uniform(0.0, 2.0))
        rho0 = float(rng.uniform(0.1, 3.0)) if rng.random() < 0.7 else np.inf
        got = l1_box_objective(prox_l1_box(xprime, mu, rho2, rho0), xprime, mu, rho2)
        worst = max(worst, got - l1_box_oracle(xprime, mu, rho2, rho0))
    return SelftestResult("prox_l1_box", trials, worst)


def _check_simplex(rng, trials):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        xprime = 2.0 * rng.standard_normal(n)
        got = float(np.sum((project_simplex(xprime) - xprime) ** 2))
        worst = max(worst, got - simplex_oracle(xprime))
    return SelftestResult("project_simplex", trials, worst)


def _check_generalized_max(rng, trials):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        xprime, b = 2.0 * rng.standard_normal(n), rng.standard_normal(n)
        mu = float(rng.uniform(0.05, 2.0))
        got = generalized_max_objective(prox_generalized_max(xprime, mu, b), xprime, mu, b)
        worst = max(worst, got - generalized_max_oracle(xprime, mu, b))
    return SelftestResult("prox_generalized_max", trials, worst)


def _check_orthogonality(rng, trials, n=6, r=2, samples=50):
    """Inner-product optimality of the orthogonality prox against random orthonormal Q."""
    worst = 0.0
    for _ in range(trials):
        M = rng.standard_normal((n, r))
        best = float(np.sum(prox_orthogonality(M.ravel(), n, r).reshape(n, r) * M))
        for _ in range(samples):
            Q, _ = np.linalg.qr(rng.standard_normal((n, r)))
            worst = max(worst, float(np.sum(Q * M)) - best)
    return SelftestResult("prox_orthogonality", trials, worst)


def run_prox_selftest(seed=0, trials=200):
    """Runs every oracle comparison; each result reports the worst objective excess."""
    rng = np.random.default_rng(seed)
    results = [
        _check_soft_threshold(rng, trials),
        _check_l1_box(rng, trials),
        _check_simplex(rng, trials),
        _check_generalized_max(rng, trials),
        _check_orthogonality(rng, max(1, trials // 10)),
    ]
    for res in results:
        logger.info("%s: %d trials, worst gap %.3e (%s)", res.name, res.trials, res.worst_gap,
                    "ok" if res.passed else "FAILED")
    return results
