# Dense linear algebra used by the solver: products, spectral norm, thin SVD,
# and the linear operators that carry A and its norm.

import math
from functools import cached_property

import numpy as np
from scipy.sparse.linalg import LinearOperator as ScipyOperator, eigsh

from core.exceptions import DimensionError, ParameterError

POWER_TOL = 1e-8
POWER_MAX_ITER = 500
RANK_TOL = 1e-12


def as_vector(v, what="vector"):
    """Returns v as a finite 1-D float array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if not np.all(np.isfinite(arr)):
        raise ParameterError(what, "non-finite", "entries must be finite")
    return arr


def as_matrix(M, what="matrix"):
    arr = np.atleast_2d(np.asarray(M, dtype=float))
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ParameterError(what, arr.shape, "expected a non-empty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(what, "non-finite", "entries must be finite")
    return arr


def matvec(M, v):
    M = as_matrix(M)
    v = as_vector(v)
    if M.shape[1] != v.shape[0]:
        raise DimensionError("matvec", M.shape[1], v.shape[0])
    return M @ v


def spectral_norm(M, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """
    Largest singular value of M by power iteration on M^T M.

    Starts from the normalized all-ones vector so the estimate is the same on
    every run and platform. Stops once the eigen-residual ||M^T M v - s^2 v|| is
    within tol * s^2; when the spectral gap is too small for that to happen in
    max_iter steps, Lanczos (ARPACK) finishes from the last iterate.
    """
    if tol <= 0:
        raise ParameterError("tol", tol, "must be positive")
    M = as_matrix(M)
    if not np.any(M):
        return 0.0
    cols = M.shape[1]
    v = np.ones(cols) / np.sqrt(cols)
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        sigma2 = float(v @ w)
        if sigma2 == 0.0:
            # all-ones start lies in the null space; restart on the heaviest column
            v = np.zeros(cols)
            v[int(np.argmax(np.linalg.norm(M, axis=0)))] = 1.0
            continue
        if np.linalg.norm(w - sigma2 * v) <= tol * sigma2:
            return math.sqrt(sigma2)
        v = w / np.linalg.norm(w)
    return _lanczos_norm(M, v, tol)


def _lanczos_norm(M, v0, tol):
    cols = M.shape[1]
    if cols <= 2:
        return math.sqrt(float(np.linalg.eigvalsh(M.T @ M)[-1]))
    gram = ScipyOperator((cols, cols), matvec=lambda v: M.T @ (M @ v), dtype=float)
    top = eigsh(gram, k=1, which="LA", v0=v0, tol=tol, return_eigenvectors=False)
    return math.sqrt(max(float(top[0]), 0.0))


def _complete_basis(U, filled):
    """Fills the columns of U not in `filled` with orthonormal vectors (Gram-Schmidt on e_0, e_1, ...)."""
    n, r = U.shape
    basis = [U[:, j] for j in range(r) if filled[j]]
    candidate = 0
    for j in range(r):
        if filled[j]:
            continue
        while candidate < n:
            e = np.zeros(n)
            e[candidate] = 1.0
            candidate += 1
            for b in basis:
                e -= (b @ e) * b
            # second pass keeps the completion orthogonal to working precision
            for b in basis:
                e -= (b @ e) * b
            norm_e = np.linalg.norm(e)
            if norm_e > 1e-8:
                U[:, j] = e / norm_e
                basis.append(U[:, j])
                break
    return U


def thin_svd(M):
    """
    Thin SVD of a tall matrix through the eigendecomposition of its Gram matrix.

    Returns U (rows x cols), s (descending, >= 0) and V (cols x cols) with
    M = U diag(s) V^T.
    """
    M = as_matrix(M)
    rows, cols = M.shape
    if rows < cols:
        raise DimensionError("thin_svd rows", f">= {cols}", rows)
    evals, V = np.linalg.eigh(M.T @ M)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, V = evals[order], V[:, order]
    s = np.sqrt(np.clip(evals, 0.0, None))
    # the Gram matrix squares singular values, so rank is decided on the eigenvalues
    e_max = evals[0] if evals.size else 0.0
    filled = evals > RANK_TOL * e_max if e_max > 0 else np.zeros(cols, dtype=bool)
    U = np.zeros((rows, cols))
    if np.any(filled):
        # M V / s drifts from orthonormal in the small-s columns; QR restores it
        Q, R = np.linalg.qr((M @ V[:, filled]) / s[filled])
        signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
        U[:, filled] = Q * signs
    s = np.where(filled, s, 0.0)
    if not np.all(filled):
        U = _complete_basis(U, filled)
    return U, s, V


class LinearOperator:
    """A together with its adjoint and a cached spectral norm."""

    shape = (0, 0)

    def apply(self, x):
        raise NotImplementedError

    def apply_adjoint(self, y):
        raise NotImplementedError

    @property
    def op_norm(self):
        raise NotImplementedError


class MatrixOperator(LinearOperator):
    def __init__(self, matrix):
        self.matrix = as_matrix(matrix, "A")
        self.matrix.setflags(write=False)
        self.shape = self.matrix.shape

    def apply(self, x):
        return self.matrix @ x

    def apply_adjoint(self, y):
        return self.matrix.T @ y

    @cached_property
    def op_norm(self):
        return spectral_norm(self.matrix)


class IdentityOperator(LinearOperator):
    def __init__(self, dim):
        if dim < 1:
            raise ParameterError("dim", dim, "must be >= 1")
        self.shape = (dim, dim)

    def apply(self, x):
        return np.array(x, dtype=float, copy=True)

    def apply_adjoint(self, y):
        return np.array(y, dtype=float, copy=True)

    @property
    def op_norm(self):
        return 1.0
