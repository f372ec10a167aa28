# Problem builders: sparse FDA, robust sparse-ratio portfolio (SRM) and robust
# sparse recovery, each mapped onto ProblemComponents.

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.data_handler import class_stats
from core.exceptions import DatasetError, DimensionError, ParameterError
from core.fractional import (
    ConvexTerm, Denominator, ProblemComponents, ProxTerm, SmoothTerm, TopKNorm,
    topk_subgradient, topk_value, zero_convex, zero_smooth,
)
from core.linalg import IdentityOperator, MatrixOperator, spectral_norm
from core.prox import project_box, project_simplex, prox_l1_box, prox_orthogonality
from core.smoothing import generalized_max, l1_norm, shifted_l1

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-6
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class FdaInstance:
    C: np.ndarray
    D: np.ndarray
    r: int
    k: int
    rho: float

    @property
    def n(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class SrmInstance:
    D: np.ndarray
    b: np.ndarray
    Cs: np.ndarray  # stacked (p, n, n)


@dataclass(frozen=True)
class RecoveryInstance:
    A: np.ndarray
    b: np.ndarray
    rho0: float
    rho1: float
    rho2: float
    k: int


def _trace_form(M, X):
    """tr(X^T M X)."""
    return float(np.sum(X * (M @ X)))


def fda_problem(inst, name="fda"):
    """
    tr(X^T C X) + rho (||X||_1 - ||X||_[k]) over tr(X^T D X), X with orthonormal columns.

    x is the row-major vectorization of the n x r matrix X.
    """
    n, r = inst.n, inst.r
    if r > n:
        raise DimensionError("fda r", f"<= {n}", r)
    C, D, rho = inst.C, inst.D, inst.rho
    mat = lambda x: np.asarray(x, dtype=float).reshape(n, r)
    topk = TopKNorm(inst.k)

    def feasible(x):
        X = mat(x)
        return float(np.linalg.norm(X.T @ X - np.eye(r))) <= ORTHO_TOL

    def d_value(x):
        return _trace_form(D, mat(x))

    def sqrt_subgradient(x):
        X = mat(x)
        return (D @ X).ravel() / math.sqrt(_trace_form(D, X))

    orthogonal = lambda x, radius=None: prox_orthogonality(x, n, r)
    return ProblemComponents(
        name=name,
        dim=n * r,
        f=SmoothTerm(value=lambda x: _trace_form(C, mat(x)),
                     gradient=lambda x: 2.0 * (C @ mat(x)).ravel(),
                     lipschitz=2.0 * spectral_norm(C)),
        delta=ProxTerm(prox=orthogonal, feasible=feasible, project=orthogonal, name="stiefel"),
        g=ConvexTerm(value=lambda x: rho * topk_value(topk, x),
                     subgradient=lambda x: rho * topk_subgradient(topk, x)),
        h=l1_norm(n * r, rho),
        A=IdentityOperator(n * r),
        d=Denominator(value=d_value, subgradient=lambda x: 2.0 * (D @ mat(x)).ravel(),
                      lipschitz=2.0 * spectral_norm(D), weak_convexity=0.0,
                      d_weakly_convex=True, sqrt_weakly_convex=True,
                      sqrt_subgradient=sqrt_subgradient),
    )


def build_fda(ds, r, rho, k=None):
    mu1, mu2, S1, S2 = class_stats(ds)
    n = ds.Q.shape[1]
    if r > n:
        raise DimensionError("fda r", f"<= {n}", r)
    if rho < 0:
        raise ParameterError("rho", rho, "must be non-negative")
    C = S1 + S2
    v = mu1 - mu2
    D = np.outer(v, v)
    c_norm, d_norm = np.linalg.norm(C), np.linalg.norm(D)
    if c_norm == 0 or d_norm == 0:
        raise DatasetError(f"dataset '{ds.name}' gives a zero scatter matrix")
    k = max(1, int(math.floor(0.1 * n * r))) if k is None else k
    if not 1 <= k <= n * r:
        raise ParameterError("k", k, f"must lie in [1, {n * r}]")
    inst = FdaInstance(C=C / c_norm, D=D / d_norm, r=r, k=k, rho=float(rho))
    return inst, fda_problem(inst, name=f"fda[{ds.name},rho={rho:g}]")


def srm_problem(inst, name="srm"):
    """max(0, max(b - D x)) over max_i x^T C_i x on the probability simplex."""
    Cs, D = inst.Cs, inst.D
    n = D.shape[1]
    if Cs.ndim != 3 or Cs.shape[1:] != (n, n):
        raise DimensionError("srm covariances", (n, n), Cs.shape[1:])

    def quad_forms(x):
        return np.einsum("i,pij,j->p", x, Cs, x)

    def d_value(x):
        return float(np.max(quad_forms(x)))

    def d_subgradient(x):
        j = int(np.argmax(quad_forms(x)))
        return 2.0 * Cs[j] @ x

    def sqrt_subgradient(x):
        forms = quad_forms(x)
        j = int(np.argmax(forms))
        return Cs[j] @ x / math.sqrt(forms[j])

    def feasible(x):
        return bool(np.all(x >= -SIMPLEX_TOL)) and abs(float(np.sum(x)) - 1.0) <= SIMPLEX_TOL

    return ProblemComponents(
        name=name,
        dim=n,
        f=zero_smooth(),
        delta=ProxTerm(prox=lambda x, radius: project_simplex(x), feasible=feasible,
                       project=project_simplex, name="simplex"),
        g=zero_convex(),
        h=generalized_max(inst.b),
        A=MatrixOperator(-D),
        # Frobenius norms bound the spectral ones
        d=Denominator(value=d_value, subgradient=d_subgradient,
                      lipschitz=2.0 * float(np.max(np.linalg.norm(Cs, axis=(1, 2)))),
                      weak_convexity=0.0, d_weakly_convex=True, sqrt_weakly_convex=True,
                      sqrt_subgradient=sqrt_subgradient),
    )


def random_covariances(n, p_count, seed=0):
    """p_count matrices Y Y^T / n with Y = 10 randn(n, n)."""
    if p_count < 1:
        raise ParameterError("p_count", p_count, "must be >= 1")
    rng = np.random.default_rng(seed)
    Cs = np.empty((p_count, n, n))
    for i in range(p_count):
        Y = 10.0 * rng.standard_normal((n, n))
        Cs[i] = Y @ Y.T / n
    return Cs


def build_srm(ds, p_count=100, seed=0):
    Cs = random_covariances(ds.Q.shape[1], p_count, seed)
    inst = SrmInstance(D=np.array(ds.Q), b=np.array(ds.labels), Cs=Cs)
    return inst, srm_problem(inst, name=f"srm[{ds.name},p={p_count}]")


def recovery_problem(inst, name="recovery"):
    """(rho1 ||Ax - b||_1 + rho2 ||x||_1) / ||x||_[k] over ||x||_inf <= rho0."""
    n = inst.A.shape[1]
    rho0, rho2 = inst.rho0, inst.rho2
    if not 1 <= inst.k <= n:
        raise ParameterError("k", inst.k, f"must lie in [1, {n}]")
    topk = TopKNorm(inst.k)

    if math.isfinite(rho0):
        project = lambda x: project_box(x, rho0)
    else:
        project = lambda x: np.array(x, dtype=float, copy=True)

    return ProblemComponents(
        name=name,
        dim=n,
        f=zero_smooth(),
        delta=ProxTerm(prox=lambda x, radius: prox_l1_box(x, radius, rho2, rho0),
                       feasible=lambda x: float(np.max(np.abs(x))) <= rho0,
                       value=lambda x: rho2 * float(np.sum(np.abs(x))),
                       project=project,
                       subgradient=lambda x: rho2 * np.sign(x),
                       name="l1_box"),
        g=zero_convex(),
        h=shifted_l1(inst.b, inst.rho1),
        A=MatrixOperator(inst.A),
        d=Denominator(value=lambda x: topk_value(topk, x),
                      subgradient=lambda x: topk_subgradient(topk, x),
                      lipschitz=math.sqrt(inst.k), weak_convexity=0.0,
                      d_weakly_convex=True, sqrt_weakly_convex=False),
    )


def build_recovery(ds, rho0=math.inf, rho1=1.0, rho2=1.0, k=None):
    n = ds.Q.shape[1]
    if not rho1 > 0 or not rho2 > 0:
        raise ParameterError("rho1/rho2", (rho1, rho2), "must be positive")
    if not rho0 > 0:
        raise ParameterError("rho0", rho0, "must be positive")
    k = max(1, int(math.floor(0.1 * n))) if k is None else k
    if not 1 <= k <= n:
        raise ParameterError("k", k, f"must lie in [1, {n}]")
    inst = RecoveryInstance(A=np.array(ds.Q), b=np.array(ds.labels), rho0=float(rho0),
                            rho1=float(rho1), rho2=float(rho2), k=k)
    return inst, recovery_problem(inst, name=f"recovery[{ds.name},rho1={rho1:g},rho2={rho2:g}]")
