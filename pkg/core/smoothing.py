# Nesterov smoothing of prox-friendly convex functions.

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from core.exceptions import ParameterError
from core.prox import prox_generalized_max, soft_threshold


@dataclass(frozen=True)
class SmoothableConvex:
    """
    A convex, C_h-Lipschitz function h known through its value and proximal map.

    prox(y, mu) returns argmin_p h(p) + (1/(2 mu)) ||p - y||^2.
    subgradient(y) returns one selected element of the subdifferential.
    conjugate_prox(u, s), when present, is the prox of h* with radius s.
    """
    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    lipschitz: float
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    conjugate_prox: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = "h"


def _check_mu(mu):
    if not mu > 0:
        raise ParameterError("mu", mu, "smoothing parameter must be positive")


def smooth_value(h, mu, y):
    """h_mu(y) = (1/(2 mu)) ||y - p||^2 + h(p) with p = Prox(y; h, mu)."""
    _check_mu(mu)
    y = np.asarray(y, dtype=float)
    p = h.prox(y, mu)
    return float(np.sum((y - p) ** 2) / (2.0 * mu) + h.value(p))


def smooth_grad(h, mu, y):
    _check_mu(mu)
    y = np.asarray(y, dtype=float)
    return (y - h.prox(y, mu)) / mu


def prox_smoothed(h, mu, beta, b):
    """
    Minimizer of h_mu(y) + (beta/2) ||y - b||^2.

    Returns (ybar, ycheck) where ycheck = Prox(b; h, mu + 1/beta) and
    ybar = (ycheck + beta mu b) / (1 + beta mu).
    """
    _check_mu(mu)
    if not beta > 0:
        raise ParameterError("beta", beta, "penalty must be positive")
    b = np.asarray(b, dtype=float)
    ycheck = h.prox(b, mu + 1.0 / beta)
    ybar = (ycheck + beta * mu * b) / (1.0 + beta * mu)
    return ybar, ycheck


def moreau_decomposition_residual(h, mu, b):
    """b - Prox(b; h, mu) - mu Prox(b/mu; h*, 1/mu); zero up to rounding."""
    _check_mu(mu)
    if h.conjugate_prox is None:
        raise ParameterError("h", h.name, "no conjugate prox available")
    b = np.asarray(b, dtype=float)
    return b - h.prox(b, mu) - mu * h.conjugate_prox(b / mu, 1.0 / mu)


def l1_norm(dim, scale=1.0):
    """h(y) = scale * ||y||_1 on R^dim."""
    if scale < 0:
        raise ParameterError("scale", scale, "must be non-negative")
    return SmoothableConvex(
        value=lambda y: scale * float(np.sum(np.abs(y))),
        prox=lambda y, mu: soft_threshold(y, scale * mu),
        lipschitz=scale * math.sqrt(dim),
        subgradient=lambda y: scale * np.sign(y),
        conjugate_prox=lambda u, s: np.clip(u, -scale, scale),
        name="l1",
    )


def shifted_l1(b, scale=1.0):
    """h(y) = scale * ||y - b||_1."""
    if scale < 0:
        raise ParameterError("scale", scale, "must be non-negative")
    b = np.array(b, dtype=float)
    b.setflags(write=False)
    return SmoothableConvex(
        value=lambda y: scale * float(np.sum(np.abs(y - b))),
        prox=lambda y, mu: b + soft_threshold(y - b, scale * mu),
        lipschitz=scale * math.sqrt(b.size),
        subgradient=lambda y: scale * np.sign(y - b),
        conjugate_prox=lambda u, s: np.clip(u - s * b, -scale, scale),
        name="shifted_l1",
    )


def _generalized_max_subgradient(b):
    def subgradient(y):
        v = y + b
        s = np.zeros_like(v)
        if np.max(v) > 0.0:
            s[int(np.argmax(v))] = 1.0
        return s
    return subgradient


def generalized_max(b):
    """h(y) = max(0, max(y + b)); 1-Lipschitz in the Euclidean norm."""
    b = np.array(b, dtype=float)
    b.setflags(write=False)
    return SmoothableConvex(
        value=lambda y: max(0.0, float(np.max(y + b))),
        prox=lambda y, mu: prox_generalized_max(y, mu, b),
        lipschitz=1.0,
        subgradient=_generalized_max_subgradient(b),
        name="generalized_max",
    )
