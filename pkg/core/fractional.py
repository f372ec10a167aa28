# Problem model for min_x u(x)/d(x), u = f + delta - g + h(Ax).

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from config.settings import SQRT_GUARD
from core.exceptions import DenominatorError, DimensionError, ParameterError
from core.linalg import LinearOperator
from core.smoothing import SmoothableConvex, smooth_value


@dataclass(frozen=True)
class SmoothTerm:
    """f: value, gradient and smoothness constant L_f."""
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float


@dataclass(frozen=True)
class ProxTerm:
    """
    delta: prox-friendly, possibly an indicator.

    value() returns the finite part only; feasibility of the indicator part is
    reported by feasible(). project() is the projection onto the indicator's set
    and subgradient() a selected subgradient of the finite part, both used by the
    subgradient baseline.
    """
    prox: Callable[[np.ndarray, float], np.ndarray]
    feasible: Callable[[np.ndarray], bool]
    value: Callable[[np.ndarray], float] = lambda x: 0.0
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "delta"


@dataclass(frozen=True)
class ConvexTerm:
    """g: convex, exposed through its value and one selected subgradient."""
    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Denominator:
    """
    d with a selected subgradient, Lipschitz constant C_d and weak-convexity modulus W_d.

    d_weakly_convex / sqrt_weakly_convex say which of d and sqrt(d) the modulus
    applies to; the quadratic-transform variants need the latter.
    """
    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    weak_convexity: float = 0.0
    d_weakly_convex: bool = True
    sqrt_weakly_convex: bool = False
    sqrt_subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class ProblemComponents:
    name: str
    dim: int
    f: SmoothTerm
    delta: ProxTerm
    g: ConvexTerm
    h: SmoothableConvex
    A: LinearOperator
    d: Denominator

    def __post_init__(self):
        if self.A.shape[1] != self.dim:
            raise DimensionError(f"{self.name} operator columns", self.dim, self.A.shape[1])
        for label, value in (("L_f", self.f.lipschitz), ("C_h", self.h.lipschitz),
                             ("C_d", self.d.lipschitz), ("W_d", self.d.weak_convexity)):
            if value < 0:
                raise ParameterError(label, value, "must be non-negative")

    @property
    def supports_quadratic_transform(self):
        return self.d.sqrt_weakly_convex


def zero_smooth():
    return SmoothTerm(value=lambda x: 0.0, gradient=np.zeros_like, lipschitz=0.0)


def zero_convex():
    return ConvexTerm(value=lambda x: 0.0, subgradient=np.zeros_like)


def unconstrained():
    """delta = 0."""
    return ProxTerm(prox=lambda x, radius: np.array(x, dtype=float, copy=True),
                    feasible=lambda x: True, project=lambda x: np.array(x, dtype=float, copy=True),
                    name="zero")


def denominator_value(P, x):
    """d(x), raising when it is not positive."""
    value = P.d.value(x)
    if not value > 0:
        raise DenominatorError(value)
    return value


def sqrt_denominator_subgradient(P, x):
    """Selected element of the subdifferential of sqrt(d) at x."""
    value = P.d.value(x)
    if value < SQRT_GUARD:
        raise DenominatorError(value)
    if P.d.sqrt_subgradient is not None:
        return P.d.sqrt_subgradient(x)
    return P.d.subgradient(x) / (2.0 * math.sqrt(value))


def numerator_value(P, x, y=None):
    """u(x) with h evaluated at y (default Ax); inf when x is infeasible."""
    if not P.delta.feasible(x):
        return math.inf
    if y is None:
        y = P.A.apply(x)
    return P.f.value(x) + P.delta.value(x) - P.g.value(x) + P.h.value(y)


def objective(P, x):
    """F(x) = u(x)/d(x)."""
    u = numerator_value(P, x)
    if math.isinf(u):
        return u
    return u / denominator_value(P, x)


def varphi(P, x, y):
    """The split ratio {f + delta - g + h(y)}/d(x)."""
    u = numerator_value(P, x, y)
    if math.isinf(u):
        return u
    return u / denominator_value(P, x)


def U_value(P, x, y, z, beta, mu):
    """f + <Ax - y, z> + (beta/2)||Ax - y||^2 + delta - g + h_mu(y)."""
    if not beta > 0:
        raise ParameterError("beta", beta, "must be positive")
    if not P.delta.feasible(x):
        return math.inf
    r = P.A.apply(x) - y
    s = P.f.value(x) + float(r @ z) + 0.5 * beta * float(r @ r)
    return s + P.delta.value(x) - P.g.value(x) + smooth_value(P.h, mu, y)


def L_value(P, x, y, z, beta, mu):
    u = U_value(P, x, y, z, beta, mu)
    d = denominator_value(P, x)
    return u / d


def K_value(P, alpha, x, y, z, beta, mu):
    """-2 alpha sqrt(d(x)) + alpha^2 U."""
    if alpha == 0:
        return 0.0
    d = P.d.value(x)
    if d < 0:
        raise DenominatorError(d)
    u = U_value(P, x, y, z, beta, mu)
    return -2.0 * alpha * math.sqrt(d) + alpha * alpha * u


@dataclass(frozen=True)
class TopKNorm:
    """||x||_[k]: sum of the k largest magnitudes."""
    k: int

    def _check(self, x):
        if not 1 <= self.k <= x.size:
            raise ParameterError("k", self.k, f"must lie in [1, {x.size}]")

    def support(self, x):
        """Indices of the selected top-k entries: descending |x|, ties by ascending index."""
        self._check(x)
        order = np.lexsort((np.arange(x.size), -np.abs(x)))
        return order[:self.k]


def topk_value(T, x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(np.abs(x[T.support(x)])))


def topk_subgradient(T, x):
    x = np.asarray(x, dtype=float)
    s = np.zeros_like(x)
    idx = T.support(x)
    s[idx] = np.sign(x[idx])
    return s
