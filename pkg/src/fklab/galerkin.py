"""Fourier-Galerkin reference solver on the Galerkin space ``span{e_k, |k| <= N}``.

Vectors hold Fourier coefficients indexed ``-N .. N``.  Function-space
objects (test functions, the generator ``L``) and density-space objects
(probability densities, the Fokker-Planck operator ``L^dagger``) are kept
apart by a space tag; the two are related by :func:`fklab.linalg.flip_transpose`.

Scheme matrices act on densities:
``Q = exp(delta dt B) exp(dt L^dagger) exp((1 - delta) dt B)``,
the Lebesgue adjoint of ``exp((1 - delta) dt W) exp(dt L) exp(delta dt W)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ConfigurationError, NumericalError
from .linalg import dominant_eigenpair, flip_transpose, lu_solve, matexp, refine_eigenvector
from .model import ProblemSpec, TWO_PI, fourier_coeffs, quadrature_grid

DEFAULT_N = 30
EIG_TOL = 1e-12
EIG_MAX_ITER = 100_000


class Space(str, enum.Enum):
    FUNCTION = "function"
    DENSITY = "density"


@dataclass(frozen=True)
class CoeffVector:
    entries: np.ndarray
    space: Space = Space.DENSITY

    @property
    def N(self) -> int:
        return (self.entries.size - 1) // 2

    def __getitem__(self, k: int) -> complex:
        return complex(self.entries[k + self.N])

    @property
    def mass(self) -> complex:
        """Lebesgue integral, i.e. the mode-0 coefficient."""
        return self[0]

    def on_grid(self, n: int | None = None) -> np.ndarray:
        """Real values on the ``n``-point uniform grid (default ``8N + 8``)."""
        return evaluate_series(self.entries, quadrature_grid(n or grid_size(self.N)))

    def pair(self, other: "CoeffVector") -> complex:
        """Bilinear Lebesgue pairing ``int f g dq = sum_k f_k g_{-k}``."""
        return complex(np.dot(self.entries, other.entries[::-1]))


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray
    space: Space = Space.DENSITY

    @property
    def N(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def __matmul__(self, other):
        if isinstance(other, CoeffVector):
            _same_space(self.space, other.space)
            return CoeffVector(self.entries @ other.entries, self.space)
        if isinstance(other, OperatorMatrix):
            _same_space(self.space, other.space)
            return OperatorMatrix(self.entries @ other.entries, self.space)
        return NotImplemented

    def __add__(self, other):
        _same_space(self.space, other.space)
        return OperatorMatrix(self.entries + other.entries, self.space)

    def adjoint(self) -> "OperatorMatrix":
        """Lebesgue adjoint, moved to the other space."""
        other = Space.DENSITY if self.space is Space.FUNCTION else Space.FUNCTION
        return OperatorMatrix(flip_transpose(self.entries), other)


def _same_space(a: Space, b: Space):
    if a is not b:
        raise TypeError(f"cannot combine {a.value}-space and {b.value}-space objects")


def grid_size(N: int) -> int:
    return 8 * N + 8


def evaluate_series(coeffs: np.ndarray, q: np.ndarray) -> np.ndarray:
    N = (coeffs.size - 1) // 2
    ks = np.arange(-N, N + 1)
    return (np.exp(1j * TWO_PI * np.multiply.outer(q, ks)) @ coeffs).real


def _toeplitz(c: np.ndarray, N: int) -> np.ndarray:
    """``T[j, k] = c_{j-k}``; ``c`` indexed ``-2N .. 2N``."""
    idx = np.arange(-N, N + 1)
    return c[np.subtract.outer(idx, idx) + 2 * N]


def assemble_function_generator(spec: ProblemSpec, N: int) -> OperatorMatrix:
    """Generator ``L = b d/dq + (sigma^2/2) d^2/dq^2`` acting on coefficients."""
    b = fourier_coeffs(spec.drift_field, 2 * N)
    k = np.arange(-N, N + 1)
    L = _toeplitz(b, N) * (2j * np.pi * k)[None, :]
    L = L + np.diag(-2.0 * np.pi**2 * spec.sigma**2 * k**2)
    return OperatorMatrix(L.astype(complex), Space.FUNCTION)


def assemble_density_generator(spec: ProblemSpec, N: int) -> OperatorMatrix:
    """Fokker-Planck operator ``-d/dq(b .) + (sigma^2/2) d^2/dq^2``."""
    b = fourier_coeffs(spec.drift_field, 2 * N)
    k = np.arange(-N, N + 1)
    L = -(2j * np.pi * k)[:, None] * _toeplitz(b, N)
    L = L + np.diag(-2.0 * np.pi**2 * spec.sigma**2 * k**2)
    return OperatorMatrix(L.astype(complex), Space.DENSITY)


def assemble_weight(spec: ProblemSpec, N: int, space: Space = Space.DENSITY) -> OperatorMatrix:
    """Multiplication by ``W``: Toeplitz matrix of its Fourier coefficients."""
    return OperatorMatrix(_toeplitz(fourier_coeffs(spec.W, 2 * N), N).astype(complex), space)


def _eig(Q, tol=EIG_TOL, max_iter=EIG_MAX_ITER):
    entries = Q.entries if isinstance(Q, OperatorMatrix) else Q
    return dominant_eigenpair(entries, tol=tol, max_iter=max_iter)


def _real(value: complex, what: str, tol: float = 1e-10) -> float:
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise NumericalError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def _normalize_mass(v: np.ndarray, space=Space.DENSITY) -> CoeffVector:
    N = (v.size - 1) // 2
    if v[N] == 0:
        raise NumericalError("eigenvector has zero mass")
    v = v / v[N]
    # enforce conjugate symmetry of a real field
    v = 0.5 * (v + np.conj(v[::-1]))
    return CoeffVector(v, space)


def continuum_reference(spec: ProblemSpec, N: int = DEFAULT_N, t: float = 1.0,
                        tol: float = EIG_TOL):
    """Principal eigenvalue of ``L + W`` with the tilted density and the
    right eigenfunction.

    The eigenvectors come from power iteration on ``exp(t A)`` followed by two
    bordered Newton steps on ``A`` (see :func:`fklab.linalg.refine_eigenvector`);
    the Poisson solve downstream differentiates ``nu_W`` up to three times, so
    the iteration-tolerance residual would otherwise dominate it.  The
    eigenvalue is the Rayleigh quotient of ``A`` itself, which avoids the
    ``2^s`` error amplification of ``log`` after many squarings.

    Returns
    -------
    lambda0 : float
    nu_W : CoeffVector (density, mass 1)
    h_hat : CoeffVector (function, mode-0 coefficient 1)
    """
    A = assemble_density_generator(spec, N) + assemble_weight(spec, N)
    _, v = _eig(matexp(A.entries, t), tol=tol)
    lam, v = refine_eigenvector(A.entries, v)
    lam0 = _real(lam, "continuum eigenvalue")
    nu = _normalize_mass(v)

    Af = assemble_function_generator(spec, N) + assemble_weight(spec, N, Space.FUNCTION)
    _, h = _eig(matexp(Af.entries, t), tol=tol)
    _, h = refine_eigenvector(Af.entries, h)
    h_hat = _normalize_mass(h, Space.FUNCTION)
    return lam0, nu, h_hat


def scheme_matrix(spec: ProblemSpec, N: int, dt: float, delta: float) -> OperatorMatrix:
    """Density-space one-step operator ``exp(delta dt B) exp(dt L^dagger) exp((1-delta) dt B)``."""
    if not dt > 0:
        raise ConfigurationError("timestep must be positive", key="dt")
    if not 0.0 <= delta <= 1.0:
        raise ConfigurationError("delta must lie in [0, 1]", key="delta")
    L = assemble_density_generator(spec, N).entries
    B = assemble_weight(spec, N).entries
    QL = matexp(L, dt)
    Q = matexp(B, delta * dt) @ QL @ matexp(B, (1.0 - delta) * dt)
    return OperatorMatrix(Q, Space.DENSITY)


def scheme_eigen(spec: ProblemSpec, N: int, dt: float, delta: float, tol: float = EIG_TOL):
    """``(lambda_dt, nu_W_dt)``: ``log(Lambda) / dt`` and the mass-1 stationary density."""
    Q = scheme_matrix(spec, N, dt, delta)
    Lam, v = _eig(Q, tol=tol)
    Lam = complex(_real(Lam, "scheme eigenvalue"))
    if Lam.real <= 0:
        raise NumericalError("dominant scheme eigenvalue is not positive")
    return math.log(Lam.real) / dt, _normalize_mass(v)


def observable_average(density: CoeffVector, phi, n: int | None = None) -> float:
    """``sum phi(q_i) rho(q_i) / sum rho(q_i)`` on the uniform grid."""
    q = quadrature_grid(n or grid_size(density.N))
    rho = evaluate_series(density.entries, q)
    total = rho.sum()
    if not math.isfinite(total) or abs(total) <= 1e-13 * np.abs(rho).sum():
        raise NumericalError("density has zero mass on the quadrature grid")
    return float(np.dot(np.asarray(phi(q), dtype=float), rho) / total)


def tu_corrected_average(density_firstorder: CoeffVector, phi, W, dt: float,
                         n: int | None = None) -> float:
    """Average under the trapezoid-rule measure recovered from the left-point
    one: ``int exp(dt W/2) phi rho / int exp(dt W/2) rho``."""
    q = quadrature_grid(n or grid_size(density_firstorder.N))
    rho = evaluate_series(density_firstorder.entries, q)
    U = np.exp(0.5 * dt * np.asarray(W(q), dtype=float))
    den = np.dot(U, rho)
    if not math.isfinite(den) or abs(den) <= 1e-13 * np.dot(U, np.abs(rho)):
        raise NumericalError("TU correction: zero denominator")
    return float(np.dot(U * np.asarray(phi(q), dtype=float), rho) / den)


def measure_map_apply(Q: OperatorMatrix, mu: CoeffVector) -> CoeffVector:
    """One step of the normalized map ``mu -> Q mu / mass(Q mu)``."""
    out = Q @ mu
    m = out.mass
    if m == 0 or not np.isfinite(m):
        raise NumericalError("measure map: zero mass")
    return CoeffVector(out.entries / m, out.space)


def grid_tv(a: CoeffVector, b: CoeffVector, n: int | None = None) -> float:
    """Half the L1 distance between two densities on the uniform grid."""
    n = n or grid_size(max(a.N, b.N))
    return float(0.5 * np.mean(np.abs(a.on_grid(n) - b.on_grid(n))))


def expansion_term(spec: ProblemSpec, N: int, k: int, delta: float) -> OperatorMatrix:
    """Order-``k`` coefficient of the one-step operator in function space:
    ``sum_{a+b+c=k} (1-delta)^a delta^c W^a L^b W^c / (a! b! c!)``."""
    if k < 0:
        raise ConfigurationError("expansion order must be non-negative", key="k")
    L = assemble_function_generator(spec, N).entries
    Wm = assemble_weight(spec, N, Space.FUNCTION).entries
    n = L.shape[0]
    Lp = [np.eye(n, dtype=complex)]
    Wp = [np.eye(n, dtype=complex)]
    for _ in range(k):
        Lp.append(Lp[-1] @ L)
        Wp.append(Wp[-1] @ Wm)
    out = np.zeros((n, n), dtype=complex)
    for a, c in product(range(k + 1), repeat=2):
        b = k - a - c
        if b < 0:
            continue
        coef = (1 - delta) ** a * delta**c / (
            math.factorial(a) * math.factorial(b) * math.factorial(c)
        )
        if coef:
            out += coef * (Wp[a] @ Lp[b] @ Wp[c])
    return OperatorMatrix(out, Space.FUNCTION)


@dataclass
class LeadingCorrection:
    """Leading-order bias data: ``nu_W_dt ~ (1 + dt^p f) nu_W``."""

    p: int
    delta: float
    lam: float
    nu_W: CoeffVector
    h_hat: CoeffVector
    grid: np.ndarray
    rho_grid: np.ndarray
    f_grid: np.ndarray
    lambda_p1: float
    centering: float
    bordered_multiplier: complex

    def correction(self, phi) -> float:
        """``int phi f d nu_W``: coefficient of ``dt^p`` in the average of ``phi``."""
        vals = np.asarray(phi(self.grid), dtype=float)
        return float(np.mean(vals * self.f_grid * self.rho_grid))

    @property
    def eigenvalue_coefficient(self) -> float:
        """Coefficient of ``dt^p`` in ``lambda_dt - lambda``."""
        return self.lambda_p1 - self.lam ** (self.p + 1) / math.factorial(self.p + 1)


def leading_correction(spec: ProblemSpec, N: int = DEFAULT_N, p: int = 1,
                       delta: float = 0.0) -> LeadingCorrection:
    """Solve the Poisson problem for the leading correction ``f``.

    With ``A = expansion_term(p+1, delta)``, solves
    ``(L^dagger + W - lambda) x = -A^dagger nu_W + c nu_W`` subject to
    ``int x h_hat = 0`` (bordered system, dense LU), then sets
    ``f = x / nu_W - int x``.  ``c`` centres the right-hand side.
    """
    if p not in (1, 2):
        raise ConfigurationError("order p must be 1 or 2", key="p")
    if p == 2 and abs(delta - 0.5) > 1e-15:
        raise ConfigurationError("second order requires the trapezoid rule (delta = 1/2)",
                                 key="delta")
    lam, nu, h_hat = continuum_reference(spec, N)
    A = expansion_term(spec, N, p + 1, delta)
    Adag = A.adjoint()

    centering = (A @ h_hat).pair(nu) / h_hat.pair(nu)
    r = -(Adag @ nu).entries + centering * nu.entries

    M = (assemble_density_generator(spec, N) + assemble_weight(spec, N)).entries
    M = M - lam * np.eye(M.shape[0])
    row = h_hat.entries[::-1]              # x -> sum_k x_k h_{-k} = int x h_hat
    col = np.conj(row)
    n = M.shape[0]
    big = np.zeros((n + 1, n + 1), dtype=complex)
    big[:n, :n] = M
    big[:n, n] = col
    big[n, :n] = row
    sol = lu_solve(big, np.concatenate([r, [0.0]]))
    x = CoeffVector(sol[:n], Space.DENSITY)

    grid = quadrature_grid(grid_size(N))
    rho = nu.on_grid(len(grid))
    if np.min(rho) <= 0:
        raise NumericalError("tilted density is not positive on the grid")
    f = x.on_grid(len(grid)) / rho - float(np.mean(x.on_grid(len(grid))))

    ones = np.zeros(n, dtype=complex)
    ones[N] = 1.0
    A1 = A @ CoeffVector(ones, Space.FUNCTION)
    W_grid = np.asarray(spec.W(grid), dtype=float)
    lambda_p1 = _real(A1.pair(nu), "int A_{p+1} 1 d nu_W") + float(np.mean(W_grid * f * rho))

    return LeadingCorrection(
        p=p, delta=float(delta), lam=lam, nu_W=nu, h_hat=h_hat, grid=grid,
        rho_grid=rho, f_grid=f, lambda_p1=lambda_p1,
        centering=_real(complex(centering), "centering constant"),
        bordered_multiplier=complex(sol[n]),
    )


@dataclass
class GalerkinReport:
    lambda0: float
    lambda_dt: float
    nu_W: CoeffVector
    nu_W_dt: CoeffVector
    h_hat: CoeffVector
    averages: dict = field(default_factory=dict)


def galerkin_report(spec: ProblemSpec, N: int, dt: float, delta: float,
                    observables: dict | None = None) -> GalerkinReport:
    """Continuum and scheme quantities plus averages of named observables.

    Averages are keyed ``"<name>"`` (scheme measure), ``"<name>@0"``
    (continuum measure) and, for ``delta = 0``, ``"<name>@tu"``.
    """
    observables = observables or {"phi": spec.phi, "W": spec.W}
    lam0, nu, h_hat = continuum_reference(spec, N)
    lam_dt, nu_dt = scheme_eigen(spec, N, dt, delta)
    averages = {}
    for name, fn in observables.items():
        averages[name] = observable_average(nu_dt, fn)
        averages[f"{name}@0"] = observable_average(nu, fn)
        if delta == 0.0:
            averages[f"{name}@tu"] = tu_corrected_average(nu_dt, fn, spec.W, dt)
    return GalerkinReport(lam0, lam_dt, nu, nu_dt, h_hat, averages)
