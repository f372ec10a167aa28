# Closed-form proximal operators and projections.
#
# Convention: prox(x'; p, mu) = argmin_x p(x) + (1/(2 mu)) ||x - x'||^2.

import math

import numpy as np

from core.exceptions import DimensionError, ParameterError
from core.linalg import as_vector, thin_svd


def _require_positive(name, value):
    if not value > 0:
        raise ParameterError(name, value, "must be positive")


def soft_threshold(b, tau):
    """sign(b) * max(|b| - tau, 0), componentwise."""
    if tau < 0:
        raise ParameterError("tau", tau, "must be non-negative")
    b = as_vector(b, "b")
    return np.sign(b) * np.maximum(np.abs(b) - tau, 0.0)


def project_box(xprime, rho0):
    _require_positive("rho0", rho0)
    return np.clip(as_vector(xprime, "xprime"), -rho0, rho0)


def prox_l1_box(xprime, mu, rho2, rho0=math.inf):
    """
    Prox of rho2 * ||x||_1 restricted to ||x||_inf <= rho0.

    Each coordinate is solved by comparing the five critical points
    {0, -rho0, rho0, P[0,rho0](x' - mu rho2), P[-rho0,0](x' + mu rho2)}.
    Exact ties go to the candidate with the smaller magnitude.
    """
    _require_positive("mu", mu)
    _require_positive("rho0", rho0)
    if rho2 < 0:
        raise ParameterError("rho2", rho2, "must be non-negative")
    xprime = as_vector(xprime, "xprime")

    columns = [
        np.zeros_like(xprime),
        np.clip(xprime - mu * rho2, 0.0, rho0),
        np.clip(xprime + mu * rho2, -rho0, 0.0),
    ]
    if math.isfinite(rho0):
        columns += [np.full_like(xprime, -rho0), np.full_like(xprime, rho0)]
    candidates = np.stack(columns, axis=-1)

    objective = (candidates - xprime[:, None]) ** 2 / (2.0 * mu) + rho2 * np.abs(candidates)
    order = np.lexsort((np.abs(candidates), objective), axis=-1)
    best = order[:, 0]
    return candidates[np.arange(xprime.size), best]


def project_simplex(xprime):
    """Euclidean projection onto {p >= 0, sum(p) = 1} by sorting."""
    xprime = as_vector(xprime, "xprime")
    if xprime.size == 0:
        raise DimensionError("project_simplex", ">= 1", 0)
    u = -np.sort(-xprime, kind="stable")
    css = np.cumsum(u) - 1.0
    index = np.arange(1, u.size + 1)
    active = np.nonzero(u - css / index > 0)[0]
    rho = active[-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(xprime - tau, 0.0)


def generalized_max_dual(vprime, mu):
    """Dual solution z of min_v (1/2mu)||v - v'||^2 + max(v): the simplex projection of v'/mu."""
    _require_positive("mu", mu)
    return project_simplex(as_vector(vprime, "vprime") / mu)


def _generalized_max_objective(v, vprime, mu):
    return float(np.sum((v - vprime) ** 2) / (2.0 * mu) + max(0.0, float(np.max(v))))


def prox_generalized_max(xprime, mu, b):
    """Prox of p(x) = max(0, max(x + b))."""
    _require_positive("mu", mu)
    xprime = as_vector(xprime, "xprime")
    b = as_vector(b, "b")
    if b.shape != xprime.shape:
        raise DimensionError("prox_generalized_max b", xprime.size, b.size)

    vprime = xprime + b
    if np.max(vprime) <= 0.0:
        return xprime.copy()

    active = vprime - mu * generalized_max_dual(vprime, mu)
    # If the reduced problem lands below zero the optimum sits on max(v) = 0.
    flat = np.minimum(vprime, 0.0)
    if _generalized_max_objective(flat, vprime, mu) < _generalized_max_objective(active, vprime, mu):
        return flat - b
    return active - b


def prox_orthogonality(xprime, n, r):
    """
    Nearest point with orthonormal columns: U V^T from the thin SVD of mat(x').

    mat() is the row-major n x r reshape used throughout the package.
    """
    if n < r:
        raise DimensionError("prox_orthogonality rows", f">= {r}", n)
    xprime = as_vector(xprime, "xprime")
    if xprime.size != n * r:
        raise DimensionError("prox_orthogonality", n * r, xprime.size)
    U, _, V = thin_svd(xprime.reshape(n, r))
    return (U @ V.T).ravel()
