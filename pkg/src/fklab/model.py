"""Torus geometry, periodic fields and the experiment presets.

All positions live on the unit torus [0, 1).  Smooth fields (potential,
weight) are trigonometric polynomials so that derivatives and Fourier
coefficients are exact; observables are opaque vectorized callables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigurationError, InvalidInputError

TWO_PI = 2.0 * math.pi


def wrap(x):
    """Map ``x`` onto the torus, returning ``x - floor(x)`` in ``[0, 1)``.

    Works on scalars and arrays.  Rounding can make ``x - floor(x)`` equal to
    1.0 for tiny negative inputs; those are sent to 0.0.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("cannot wrap non-finite position")
    out = arr - np.floor(arr)
    out = np.where(out >= 1.0, 0.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


class TrigPolynomial:
    """Real trigonometric polynomial ``sum_k c_k exp(2 i pi k q)``, ``|k| <= K``.

    Parameters
    ----------
    coeffs : mapping or array
        Either a mapping ``{k: c_k}`` or a length ``2K+1`` complex array
        indexed from ``-K`` to ``K``.  Conjugate symmetry is enforced.
    """

    def __init__(self, coeffs):
        if isinstance(coeffs, Mapping):
            K = max((abs(int(k)) for k in coeffs), default=0)
            arr = np.zeros(2 * K + 1, dtype=complex)
            for k, c in coeffs.items():
                arr[int(k) + K] += complex(c)
        else:
            arr = np.array(coeffs, dtype=complex).ravel()
            if arr.size % 2 == 0:
                raise ValueError("coefficient array must have odd length 2K+1")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("non-finite Fourier coefficient")
        scale = max(1.0, float(np.max(np.abs(arr), initial=0.0)))
        if np.max(np.abs(arr - np.conj(arr[::-1])), initial=0.0) > 1e-12 * scale:
            raise ValueError("coefficients are not conjugate symmetric (field not real)")
        arr = 0.5 * (arr + np.conj(arr[::-1]))
        self._coeffs = _trim(arr)
        self._coeffs.setflags(write=False)

    @classmethod
    def constant(cls, c: float) -> "TrigPolynomial":
        return cls({0: c})

    @classmethod
    def cosine(cls, k: int, amplitude: float = 1.0) -> "TrigPolynomial":
        """``amplitude * cos(2 pi k q)``."""
        if k == 0:
            return cls.constant(amplitude)
        return cls({k: amplitude / 2, -k: amplitude / 2})

    @classmethod
    def sine(cls, k: int, amplitude: float = 1.0) -> "TrigPolynomial":
        """``amplitude * sin(2 pi k q)``."""
        return cls({k: -0.5j * amplitude, -k: 0.5j * amplitude})

    @property
    def degree(self) -> int:
        return (self._coeffs.size - 1) // 2

    @property
    def coeffs(self) -> np.ndarray:
        """Read-only complex coefficients indexed ``-degree .. degree``."""
        return self._coeffs

    def coefficient(self, k: int) -> complex:
        K = self.degree
        if abs(k) > K:
            return 0j
        return complex(self._coeffs[k + K])

    @property
    def is_zero(self) -> bool:
        return not np.any(self._coeffs)

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        K = self.degree
        ks = np.arange(-K, K + 1)
        phases = np.exp(1j * TWO_PI * np.multiply.outer(q, ks))
        return (phases @ self._coeffs).real

    def derivative(self, n: int = 1) -> "TrigPolynomial":
        K = self.degree
        ks = np.arange(-K, K + 1)
        return TrigPolynomial((2j * np.pi * ks) ** n * self._coeffs)

    def real_form(self) -> np.ndarray:
        """Pack as ``[a_0, a_1..a_K, b_1..b_K]`` with
        ``f(q) = a_0 + sum_k a_k cos(2 pi k q) + b_k sin(2 pi k q)``."""
        K = self.degree
        pos = self._coeffs[K + 1:]
        return np.concatenate(
            ([self._coeffs[K].real], 2.0 * pos.real, -2.0 * pos.imag)
        ).astype(float)

    def max_abs_bound(self) -> float:
        """Upper bound on ``sup |f|`` (sum of coefficient moduli)."""
        return float(np.sum(np.abs(self._coeffs)))

    def __add__(self, other):
        if not isinstance(other, TrigPolynomial):
            other = TrigPolynomial.constant(float(other))
        K = max(self.degree, other.degree)
        return TrigPolynomial(_pad(self._coeffs, K) + _pad(other._coeffs, K))

    __radd__ = __add__

    def __mul__(self, scalar):
        return TrigPolynomial(float(scalar) * self._coeffs)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return self._coeffs.shape == other._coeffs.shape and np.array_equal(
            self._coeffs, other._coeffs
        )

    def __hash__(self):
        return hash(self._coeffs.tobytes())

    def __repr__(self):
        K = self.degree
        terms = {k - K: c for k, c in enumerate(self._coeffs) if c != 0}
        return f"TrigPolynomial({terms})"


def _trim(arr: np.ndarray) -> np.ndarray:
    K = (arr.size - 1) // 2
    while K > 0 and arr[0] == 0 and arr[-1] == 0:
        arr = arr[1:-1]
        K -= 1
    return arr.copy()


def _pad(arr: np.ndarray, K: int) -> np.ndarray:
    k0 = (arr.size - 1) // 2
    return np.pad(arr, K - k0)


@dataclass(frozen=True)
class PeriodicFunction:
    """Closed-form 1-periodic observable, evaluated pointwise (vectorized)."""

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "phi"

    def __call__(self, q):
        return self.func(np.asarray(q, dtype=float))


def quadrature_grid(n: int) -> np.ndarray:
    """``n`` uniformly spaced points ``j/n`` of the periodic trapezoid rule."""
    return np.arange(n) / n


def fourier_coeffs(fld, K: int) -> np.ndarray:
    """Fourier coefficients ``c_{-K} .. c_K`` of a periodic field.

    Exact for a :class:`TrigPolynomial`.  Any other callable is integrated by
    the periodic trapezoid rule on ``8(K+1)`` points.
    """
    if K < 0:
        raise ConfigurationError("degree bound must be non-negative", key="K")
    if isinstance(fld, TrigPolynomial):
        d = fld.degree
        if d <= K:
            return _pad(fld.coeffs, K)
        return fld.coeffs[d - K: d + K + 1].copy()
    if np.isscalar(fld):
        out = np.zeros(2 * K + 1, dtype=complex)
        out[K] = fld
        return out
    n = 8 * (K + 1)
    q = quadrature_grid(n)
    values = np.asarray(fld(q), dtype=float)
    ks = np.arange(-K, K + 1)
    return np.exp(-1j * TWO_PI * np.multiply.outer(ks, q)) @ values / n


@dataclass(frozen=True)
class ProblemSpec:
    """Overdamped dynamics ``dq = (-V'(q) + gamma) dt + sigma dB`` with weight ``W``
    and observable ``phi``."""

    V: TrigPolynomial
    gamma: float
    sigma: float
    W: TrigPolynomial
    phi: Callable = field(compare=False)
    name: str = "custom"

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError("sigma must be positive and finite", key="sigma")
        if not math.isfinite(self.gamma):
            raise ConfigurationError("gamma must be finite", key="gamma")

    @cached_property
    def dV(self) -> TrigPolynomial:
        return self.V.derivative(1)

    @cached_property
    def d3V(self) -> TrigPolynomial:
        return self.V.derivative(3)

    @cached_property
    def drift_field(self) -> TrigPolynomial:
        """``b = -V' + gamma`` as a trigonometric polynomial."""
        return self.dV * -1.0 + self.gamma

    def with_weight(self, W) -> "ProblemSpec":
        if not isinstance(W, TrigPolynomial):
            W = TrigPolynomial.constant(float(W))
        return ProblemSpec(self.V, self.gamma, self.sigma, W, self.phi, self.name)


def drift(spec: ProblemSpec, q):
    """Drift ``-V'(q) + gamma``."""
    if spec.V.is_zero:
        return np.zeros_like(np.asarray(q, dtype=float)) + spec.gamma
    return -spec.dV(q) + spec.gamma


def _exp_cos(q):
    return np.exp(np.cos(TWO_PI * q))


PRESETS = ("zero_potential", "strong_potential", "weak_potential")


def preset(name: str) -> ProblemSpec:
    """The three benchmark problems: ``zero_potential``, ``strong_potential``
    and ``weak_potential``."""
    W = TrigPolynomial({0: 0.5, 2: 0.25, -2: 0.25})  # cos^2(2 pi q)
    phi = PeriodicFunction(_exp_cos, "exp_cos")
    sigma = math.sqrt(2.0)
    if name == "zero_potential":
        V, gamma = TrigPolynomial.constant(0.0), 0.0
    elif name == "strong_potential":
        V, gamma = TrigPolynomial.cosine(1), 1.0
    elif name == "weak_potential":
        V, gamma = TrigPolynomial.cosine(1, 0.02), 1.0
    else:
        raise ConfigurationError(
            f"unknown preset (expected one of {', '.join(PRESETS)})", key=name
        )
    return ProblemSpec(V=V, gamma=gamma, sigma=sigma, W=W, phi=phi, name=name)
