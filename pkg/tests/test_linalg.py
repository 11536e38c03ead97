import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fklab.errors import NumericalError, SingularMatrixError
from fklab.linalg import (dominant_eigenpair, flip_transpose, lu_solve, matexp,
                          refine_eigenvector)


def taylor60(A, t=1.0):
    """Unscaled 60-term Taylor sum (oracle for moderate norms)."""
    X = t * np.asarray(A, dtype=complex)
    term = np.eye(X.shape[0], dtype=complex)
    out = term.copy()
    for k in range(1, 61):
        term = term @ X / k
        out = out + term
    return out


def random_complex(rng, n, scale=1.0):
    return scale * (rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n)))


class TestMatexp:
    def test_zero(self):
        np.testing.assert_array_equal(matexp(np.zeros((4, 4))), np.eye(4))

    def test_diagonal(self):
        d = np.array([-3.0, 0.0, 0.5, 2j])
        np.testing.assert_allclose(matexp(np.diag(d), 0.7), np.diag(np.exp(0.7 * d)), rtol=1e-14,
                                   atol=1e-15)

    def test_random_against_taylor(self, rng):
        for _ in range(20):
            A = random_complex(rng, 8)
            assert np.max(np.abs(matexp(A) - taylor60(A))) <= 1e-10

    def test_against_scipy_for_stiff_generator(self):
        import scipy.linalg
        k = np.arange(-10, 11)
        A = np.diag(-4 * np.pi**2 * k**2).astype(complex) + 0.25 * np.eye(21, k=2)
        ref = scipy.linalg.expm(0.1 * A)
        np.testing.assert_allclose(matexp(A, 0.1), ref, atol=1e-12)

    def test_overflow(self):
        with pytest.raises(NumericalError):
            matexp(np.array([[1000.0]]))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            matexp(np.array([[np.nan]]))

    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_semigroup(self, s, t):
        A = random_complex(np.random.default_rng(3), 5, 0.5)
        np.testing.assert_allclose(matexp(A, s) @ matexp(A, t), matexp(A, s + t), atol=1e-11,
                                   rtol=1e-11)


class TestDominantEigenpair:
    def test_scalar_identity(self):
        c, dt = 0.7, 0.1
        lam, v = dominant_eigenpair(math.exp(c * dt) * np.eye(5))
        assert lam == pytest.approx(math.exp(c * dt), rel=1e-15)
        np.testing.assert_array_equal(v, [0, 0, 1, 0, 0])

    def test_positive_matrix(self, rng):
        A = rng.random((7, 7)) + 0.1
        lam, v = dominant_eigenpair(A)
        w = np.linalg.eigvals(A)
        assert lam.real == pytest.approx(np.max(w.real), rel=1e-10)
        assert np.max(np.abs(A @ v - lam * v)) < 1e-10
        assert v[3] == 1

    def test_non_convergence_reports_residual(self):
        R = np.array([[0.0, 1.0], [-1.0, 0.0]])  # rotation: no dominant eigenvalue
        with pytest.raises(NumericalError) as exc:
            dominant_eigenpair(R, max_iter=50, start=[1.0, 0.5])
        assert exc.value.residual is not None


class TestLuSolve:
    def test_identity(self):
        b = np.arange(4) + 1j
        np.testing.assert_array_equal(lu_solve(np.eye(4), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(lu_solve(2 * np.eye(3), [4, 4, 4]), [2, 2, 2])

    def test_random_residual(self, rng):
        for _ in range(10):
            A = random_complex(rng, 20) + 5 * np.eye(20)
            b = random_complex(rng, 20)[0]
            x = lu_solve(A, b)
            assert np.max(np.abs(A @ x - b)) <= 1e-10 * max(1, np.max(np.abs(b)))

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])


def test_flip_transpose():
    N = 3
    A = np.arange(49).reshape(7, 7) + 1j * np.arange(49).reshape(7, 7)[::-1]
    B = flip_transpose(A)
    for j in range(-N, N + 1):
        for k in range(-N, N + 1):
            assert B[j + N, k + N] == A[-k + N, -j + N]
    np.testing.assert_array_equal(flip_transpose(B), A)


class TestRefine:
    def test_exact_eigenvalue_is_not_singular(self):
        A = np.diag([-3.0, 0.0, -1.0]).astype(complex)
        lam, v = refine_eigenvector(A, np.array([1e-6, 1.0, 1e-6]))
        assert lam == 0
        np.testing.assert_allclose(v, [0, 1, 0], atol=1e-15)

    def test_reduces_residual(self, rng):
        B = rng.standard_normal((7, 7))
        A = B @ np.diag([5.0, 1, 0.5, 0.2, 0.1, 0.05, 0.01]) @ np.linalg.inv(B)
        w, V = np.linalg.eig(A)
        v = V[:, np.argmax(w.real)]
        v = v / v[3] + 1e-6 * rng.standard_normal(7)
        v[3] = 1.0
        before = np.max(np.abs(A @ v - (A @ v)[3] * v))
        lam, v2 = refine_eigenvector(A, v)
        after = np.max(np.abs(A @ v2 - lam * v2))
        assert after < 1e-6 * before
        assert lam == pytest.approx(5.0, abs=1e-10)
        assert v2[3] == pytest.approx(1.0, abs=1e-14)

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            lu_solve(np.array([[np.inf]]), np.array([1.0]))
