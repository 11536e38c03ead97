"""One-step kernels for the overdamped dynamics on the torus.

Gaussian increments are passed in, so every function here is pure and works
elementwise on numpy arrays as well as on scalars.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .errors import ConfigurationError
from .model import ProblemSpec, drift, wrap


class IntegratorKind(str, enum.Enum):
    EULER = "euler"
    WEAK2 = "weak2"

    @classmethod
    def parse(cls, value) -> "IntegratorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise ConfigurationError(
                "unknown integrator (expected 'euler' or 'weak2')", key="integrator"
            ) from None

    @property
    def code(self) -> int:
        """Integer tag understood by the compiled kernels."""
        return 0 if self is IntegratorKind.EULER else 1


def _check_dt(dt):
    if not dt > 0:
        raise ConfigurationError("timestep must be positive", key="dt")


def euler_step(spec: ProblemSpec, q, dt: float, g):
    """Euler-Maruyama: ``q + b(q) dt + sigma sqrt(dt) g`` wrapped to the torus."""
    _check_dt(dt)
    q = np.asarray(q, dtype=float)
    out = q + drift(spec, q) * dt + spec.sigma * math.sqrt(dt) * np.asarray(g, dtype=float)
    return wrap(out if out.ndim else float(out))


def weak2_step(spec: ProblemSpec, q, dt: float, g):
    """Weak order two scheme with a midpoint predictor.

    The same draw ``g`` enters the predictor (halved) and the final noise.
    Reduces to :func:`euler_step` when ``V = 0``.
    """
    _check_dt(dt)
    if spec.V.is_zero:
        return euler_step(spec, q, dt, g)
    q = np.asarray(q, dtype=float)
    g = np.asarray(g, dtype=float)
    noise = spec.sigma * math.sqrt(dt) * g
    predictor = q + drift(spec, q) * (dt / 2) + 0.5 * noise
    out = (
        q
        - spec.dV(predictor) * dt
        + spec.gamma * dt
        - (spec.sigma**2 / 8) * spec.d3V(q) * dt**2
        + noise
    )
    return wrap(out if out.ndim else float(out))


def step(kind, spec: ProblemSpec, q, dt: float, g):
    kind = IntegratorKind.parse(kind)
    if kind is IntegratorKind.EULER:
        return euler_step(spec, q, dt, g)
    return weak2_step(spec, q, dt, g)
