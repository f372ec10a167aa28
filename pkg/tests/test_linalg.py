import numpy as np
import pytest

from core.exceptions import DimensionError, ParameterError
from core.linalg import IdentityOperator, MatrixOperator, matvec, spectral_norm, thin_svd


def test_spectral_norm_matches_numpy(rng):
    M = rng.standard_normal((20, 10))
    assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)


def test_spectral_norm_relative_accuracy_on_small_gaps(rng):
    # wide Gaussian matrices have nearly tied top singular values
    for _ in range(10):
        M = rng.standard_normal((100, 200))
        exact = np.linalg.norm(M, 2)
        assert abs(spectral_norm(M) - exact) <= 1e-8 * exact


def test_spectral_norm_bounds_every_direction(rng):
    M = rng.standard_normal((100, 200))
    sigma = spectral_norm(M)
    for _ in range(100):
        x = rng.standard_normal(200)
        assert np.linalg.norm(M @ x) / np.linalg.norm(x) <= sigma * (1.0 + 1e-8)


def test_spectral_norm_examples():
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-8)
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, rel=1e-8)


def test_spectral_norm_of_zero_matrix():
    assert spectral_norm(np.zeros((3, 4))) == 0.0


def test_spectral_norm_start_in_null_space():
    # the all-ones start is annihilated by this matrix
    M = np.array([[1.0, -1.0], [2.0, -2.0]])
    assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)


def test_spectral_norm_rejects_bad_tolerance(rng):
    with pytest.raises(ParameterError):
        spectral_norm(rng.standard_normal((2, 2)), tol=0.0)


def test_thin_svd_reconstructs(rng):
    M = rng.standard_normal((15, 4))
    U, s, V = thin_svd(M)
    np.testing.assert_allclose(U @ np.diag(s) @ V.T, M, atol=1e-10)
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-10)
    assert np.all(np.diff(s) <= 0)


def test_thin_svd_rank_deficient_keeps_orthonormal_columns(rng):
    M = rng.standard_normal((6, 3))
    M[:, 1] = 0.0
    U, s, V = thin_svd(M)
    assert s[-1] == 0.0
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(U @ np.diag(s) @ V.T, M, atol=1e-10)


def test_thin_svd_rejects_wide_matrix(rng):
    with pytest.raises(DimensionError):
        thin_svd(rng.standard_normal((2, 5)))


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec(np.ones((2, 3)), np.ones(2))


def test_non_finite_input_rejected():
    with pytest.raises(ParameterError):
        matvec(np.array([[np.nan]]), np.ones(1))


def test_operators(rng):
    M = rng.standard_normal((5, 3))
    op = MatrixOperator(M)
    x, y = rng.standard_normal(3), rng.standard_normal(5)
    np.testing.assert_allclose(op.apply(x), M @ x)
    assert float(op.apply(x) @ y) == pytest.approx(float(x @ op.apply_adjoint(y)))
    assert op.op_norm == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)

    ident = IdentityOperator(3)
    assert ident.op_norm == 1.0
    out = ident.apply(x)
    out[0] += 1.0
    assert x[0] != out[0]


@pytest.mark.parametrize("shape", [(10, 4), (50, 8), (2000, 20)])
def test_thin_svd_round_trip(rng, shape):
    M = rng.standard_normal(shape)
    U, s, V = thin_svd(M)
    assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-9 * np.linalg.norm(M)
    np.testing.assert_allclose(U.T @ U, np.eye(shape[1]), atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(shape[1]), atol=1e-10)


def test_thin_svd_ill_conditioned_stays_orthonormal(rng):
    left, _ = np.linalg.qr(rng.standard_normal((50, 4)))
    right, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    M = left @ np.diag([1.0, 1e-3, 1e-5, 3e-6]) @ right.T
    U, s, V = thin_svd(M)
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(s, [1.0, 1e-3, 1e-5, 3e-6], rtol=1e-3)
    assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-9 * np.linalg.norm(M)


def test_thin_svd_examples():
    U, s, V = thin_svd(np.eye(3)[:, :2])
    np.testing.assert_allclose(s, [1.0, 1.0])
    np.testing.assert_allclose(U @ V.T, np.eye(3)[:, :2], atol=1e-12)
    _, s, _ = thin_svd(np.diag([2.0, 3.0]))
    np.testing.assert_allclose(s, [3.0, 2.0])


def test_adjoint_identity(rng):
    for _ in range(100):
        m, n = rng.integers(1, 12, size=2)
        M = rng.standard_normal((m, n))
        x, y = rng.standard_normal(n), rng.standard_normal(m)
        op = MatrixOperator(M)
        gap = abs(float(op.apply(x) @ y) - float(x @ op.apply_adjoint(y)))
        assert gap <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y) * np.linalg.norm(M)
