"""Dense complex kernels: matrix exponential, power iteration, LU solve."""
from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg

from .errors import NumericalError, SingularMatrixError

TAYLOR_ORDER = 18
SCALED_NORM = 0.5


def matexp(A, t: float = 1.0) -> np.ndarray:
    """``exp(t A)`` by scaling and squaring with a truncated Taylor kernel.

    The scaled matrix has 1-norm at most 0.5, where 18 Taylor terms are
    accurate to well below double precision.
    """
    X = t * np.asarray(A, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("matexp needs a square matrix")
    if not np.all(np.isfinite(X)):
        raise NumericalError("matexp: non-finite matrix entries")
    n = X.shape[0]
    norm = np.linalg.norm(X, 1) if n else 0.0
    s = max(0, math.ceil(math.log2(norm / SCALED_NORM))) if norm > 0 else 0
    X = X / 2.0**s
    eye = np.eye(n, dtype=complex)
    E = eye.copy()
    for k in range(TAYLOR_ORDER, 0, -1):
        E = eye + (X @ E) / k
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            E = E @ E
    if not np.all(np.isfinite(E)):
        raise NumericalError("matexp: overflow while squaring")
    return E


def dominant_eigenpair(Q, tol: float = 1e-12, max_iter: int = 100_000, start=None):
    """Dominant eigenvalue and eigenvector of ``Q`` by power iteration.

    Starts from the unit vector at the central index (Fourier mode 0 for a
    ``(2N+1)``-sized Galerkin matrix) and keeps that entry equal to 1.
    Stops once successive iterates differ by less than ``tol`` in max-norm;
    the eigenvalue is the Rayleigh quotient of the final iterate.

    Returns
    -------
    (complex, ndarray)
    """
    Q = np.asarray(Q, dtype=complex)
    n = Q.shape[0]
    c = n // 2
    if start is None:
        v = np.zeros(n, dtype=complex)
        v[c] = 1.0
    else:
        v = np.array(start, dtype=complex)
        v = v / v[c]
    diff = np.inf
    for _ in range(max_iter):
        y = Q @ v
        if y[c] == 0 or not np.all(np.isfinite(y)):
            raise NumericalError("power iteration: central entry vanished")
        y = y / y[c]
        diff = float(np.max(np.abs(y - v)))
        v = y
        if diff < tol:
            break
    else:
        Qv = Q @ v
        lam = np.vdot(v, Qv) / np.vdot(v, v)
        res = float(np.max(np.abs(Qv - lam * v)))
        raise NumericalError(
            f"power iteration did not converge in {max_iter} iterations", residual=res
        )
    lam = np.vdot(v, Q @ v) / np.vdot(v, v)
    return complex(lam), v


def lu_solve(A, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` by LU with partial pivoting (LAPACK getrf/getrs)."""
    A = np.asarray(A, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise NumericalError("lu_solve: non-finite input")
    scale = float(np.max(np.abs(A), initial=0.0))
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < 1e-14 * scale:
        raise SingularMatrixError(
            f"singular matrix: smallest pivot {pivots.min():.3e} vs max entry {scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs)


def refine_eigenvector(A, v, steps: int = 2):
    """Polish an approximate eigenpair of ``A`` by Newton's method.

    Newton is applied to ``(A - lam I) v = 0`` with the central entry of
    ``v`` pinned to 1.  Each step solves the bordered system
    ``[[A - lam I, -v], [e_c^T, 0]] [dv; dlam] = [-(A - lam I) v; 0]``, which
    stays nonsingular at an exact simple eigenvalue and converges
    quadratically even for non-normal ``A``.  Power iteration stops on the
    size of the update, which for a slowly contracting matrix leaves a
    residual well above roundoff; one or two steps remove it.

    Returns
    -------
    (complex, ndarray)
        Eigenvalue and the refined vector (central entry 1).
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    c = n // 2
    v = np.asarray(v, dtype=complex)
    if v[c] == 0:
        raise NumericalError("refine_eigenvector: central entry is zero")
    v = v / v[c]
    lam = (A @ v)[c]
    big = np.zeros((n + 1, n + 1), dtype=complex)
    big[n, c] = 1.0
    for _ in range(steps):
        R = A - lam * np.eye(n)
        big[:n, :n] = R
        big[:n, n] = -v
        d = lu_solve(big, np.concatenate([-(R @ v), [0.0]]))
        v = v + d[:n]
        lam = lam + d[n]
    return complex(lam), v


def flip_transpose(A) -> np.ndarray:
    """``B[j, k] = A[-k, -j]`` on the symmetric index range (no conjugation).

    This is the adjoint under the bilinear pairing ``sum_k f_k g_{-k}``, i.e.
    the Lebesgue adjoint for Fourier coefficient matrices.
    """
    return np.asarray(A)[::-1, ::-1].T.copy()
