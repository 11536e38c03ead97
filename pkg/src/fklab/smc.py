"""Population Monte Carlo for discretized Feynman-Kac semigroups.

Each step moves every replica with the chosen integrator, weights it by
``exp(chi)`` where ``chi = dt * ((1 - delta) W(q) + delta W(q'))``, records the
mean weight and resamples multinomially.  The eigenvalue estimate is
``log(mean mass) / dt`` and observables are averaged over post-resampling
positions, both after a burn-in.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend, rng
from .errors import ConfigurationError, NumericalError
from .integrators import IntegratorKind, step as integrator_step
from .model import ProblemSpec


@dataclass(frozen=True)
class QuadratureRule:
    """Weight placement ``delta``: 0 left point, 1/2 trapezoid, 1 right point."""

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigurationError("delta must lie in [0, 1]", key="delta")


LEFT_POINT = QuadratureRule(0.0)
TRAPEZOID = QuadratureRule(0.5)


@dataclass(frozen=True)
class SmcConfig:
    M: int = 5000
    dt: float = 0.1
    T: float = 200.0
    burn_in_fraction: float = 0.5
    seed: int = 20190101
    integrator: IntegratorKind = IntegratorKind.EULER
    rule: QuadratureRule = LEFT_POINT
    realizations: int = 8

    def __post_init__(self):
        object.__setattr__(self, "integrator", IntegratorKind.parse(self.integrator))
        if not isinstance(self.rule, QuadratureRule):
            object.__setattr__(self, "rule", QuadratureRule(float(self.rule)))
        if int(self.M) != self.M or self.M < 1:
            raise ConfigurationError("replica count must be a positive integer", key="M")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("timestep must be positive", key="dt")
        if not self.T >= self.dt:
            raise ConfigurationError("total time must be at least one timestep", key="T")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigurationError("burn-in fraction must lie in [0, 1)", key="burn_in")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ConfigurationError("realizations must be a positive integer", key="realizations")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer", key="seed")

    @property
    def n_iter(self) -> int:
        # guard against T/dt landing a hair below an integer
        return int(math.floor(self.T / self.dt + 1e-9))

    @property
    def n_burn(self) -> int:
        return int(math.floor(self.burn_in_fraction * self.n_iter))

    @property
    def delta(self) -> float:
        return self.rule.delta


@dataclass
class Population:
    positions: np.ndarray
    step_mass: float = float("nan")


@dataclass
class RunTrace:
    """Per-step records of one realization."""

    masses: np.ndarray
    observable: np.ndarray


@dataclass
class SmcEstimate:
    lambda_hat: float
    phi_hat: float
    per_realization: list = field(default_factory=list)
    stderr_lambda: float = float("nan")
    stderr_phi: float = float("nan")
    traces: list | None = None


def chi(rule: QuadratureRule, spec: ProblemSpec, q, q_next, dt: float):
    """Log-weight ``dt * ((1 - delta) W(q) + delta W(q_next))``."""
    if not dt > 0:
        raise ConfigurationError("timestep must be positive", key="dt")
    d = rule.delta
    return dt * ((1.0 - d) * spec.W(q) + d * spec.W(q_next))


def estimate_lambda(kept_masses, dt: float) -> float:
    """``log(mean(P)) / dt`` over the kept mass records."""
    P = np.asarray(kept_masses, dtype=float)
    if P.size == 0:
        raise NumericalError("no mass records to average")
    if not np.all(P > 0) or not np.all(np.isfinite(P)):
        raise NumericalError("non-positive or non-finite mass record")
    return math.log(math.fsum(P) / P.size) / dt


def mean_weight(w) -> float:
    """Correctly rounded mean, so that equal weights give their exact value."""
    return math.fsum(w) / len(w)


def resample_multinomial(weights, positions, key: int, step: int = 0):
    """M i.i.d. categorical draws with probabilities ``w / sum(w)``.

    Binary search of the cumulative weights, with uniforms from the
    resampling stream of ``key`` at ``step``.
    """
    w = np.asarray(weights, dtype=float)
    positions = np.asarray(positions)
    if w.size == 0 or not np.all(np.isfinite(w)) or not np.all(w > 0):
        raise NumericalError("resampling weights must be positive and finite", step=step)
    cumw = np.cumsum(w)
    M = positions.shape[0]
    u = rng.to_unit(rng.bits(key ^ rng.RESAMPLE_TAG, step + 1, np.arange(M, dtype=np.uint64)))
    idx = np.minimum(np.searchsorted(cumw, u * cumw[-1], side="right"), w.size - 1)
    return positions[idx]


def initial_population(spec: ProblemSpec, M: int, key: int) -> Population:
    """I.i.d. uniform replicas on the torus."""
    u = rng.to_unit(rng.bits(key ^ rng.INIT_TAG, np.arange(1, M + 1, dtype=np.uint64), 0))
    return Population(positions=u)


def _noise(key: int, M: int, step: int) -> np.ndarray:
    return rng.normals(key, np.arange(1, M + 1, dtype=np.uint64), step)


def propagate_and_weigh(spec: ProblemSpec, config: SmcConfig, population: Population,
                        key: int, step: int):
    """Steps (1)-(3): move each replica with its own Gaussian, weigh, total mass.

    Returns ``(proposed_positions, weights, mean_weight)``.  Reference
    implementation built on :mod:`fklab.integrators`; :func:`smc_run` uses the
    fused kernel instead.
    """
    q = np.asarray(population.positions, dtype=float)
    g = _noise(key, q.size, step)
    proposed = np.atleast_1d(integrator_step(config.integrator, spec, q, config.dt, g))
    w = np.exp(chi(config.rule, spec, q, proposed, config.dt))
    return proposed, w, mean_weight(w)


class _KernelArgs:
    def __init__(self, spec: ProblemSpec, config: SmcConfig):
        self.vp = np.ascontiguousarray(spec.dV.real_form())
        self.v3 = np.ascontiguousarray(spec.d3V.real_form())
        self.wc = np.ascontiguousarray(spec.W.real_form())
        self.has_potential = not spec.V.is_zero
        self.kind = config.integrator.code


def run_realization(spec: ProblemSpec, config: SmcConfig, realization: int = 0,
                    backend=None, record_all: bool = False) -> tuple[float, float, RunTrace | None]:
    """One independent realization; returns ``(lambda_hat, phi_hat, trace)``."""
    kernel = _backend.get(backend)
    key = rng.realization_key(int(config.seed), realization)
    M, dt = int(config.M), float(config.dt)
    n_iter, n_burn = config.n_iter, config.n_burn
    args = _KernelArgs(spec, config)

    pos = initial_population(spec, M, key).positions
    wpos = np.ascontiguousarray(spec.W(pos), dtype=float)
    prop = np.empty(M)
    wprop = np.empty(M)
    wbuf = np.empty(M)
    cumw = np.empty(M)

    masses = np.empty(n_iter)
    obs = np.full(n_iter, np.nan)
    for n in range(n_iter):
        status = kernel.smc_step(pos, wpos, prop, wprop, wbuf, cumw, key, n, args.kind, dt,
                                 float(spec.sigma), float(spec.gamma), float(config.delta),
                                 args.vp, args.v3, args.wc, args.has_potential)
        if status < 0:
            raise NumericalError("non-positive or non-finite replica weight", step=n)
        masses[n] = status / M
        if record_all or n >= n_burn:
            obs[n] = np.mean(spec.phi(pos))

    lam = estimate_lambda(masses[n_burn:], dt)
    phi_hat = float(np.mean(obs[n_burn:]))
    trace = RunTrace(masses, obs) if record_all else None
    return lam, phi_hat, trace


def aggregate(per_realization, traces=None) -> SmcEstimate:
    arr = np.asarray(per_realization, dtype=float).reshape(-1, 2)
    R = arr.shape[0]
    lam, phi = arr.mean(axis=0)
    if R >= 2:
        se = arr.std(axis=0, ddof=1) / math.sqrt(R)
    else:
        se = (float("nan"), float("nan"))
    return SmcEstimate(
        lambda_hat=float(lam),
        phi_hat=float(phi),
        per_realization=[(float(a), float(b)) for a, b in arr],
        stderr_lambda=float(se[0]),
        stderr_phi=float(se[1]),
        traces=traces,
    )


def smc_run(spec: ProblemSpec, config: SmcConfig, threads: int = 1, backend=None,
            record_traces: bool = False) -> SmcEstimate:
    """Run ``config.realizations`` independent realizations and aggregate.

    Realizations are independent tasks; results are reduced in realization
    order, so the output does not depend on ``threads``.
    """
    R = int(config.realizations)

    def one(r):
        return run_realization(spec, config, r, backend=backend, record_all=record_traces)

    if threads > 1 and R > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(R)))
    else:
        results = [one(r) for r in range(R)]
    traces = [t for _, _, t in results] if record_traces else None
    return aggregate([(lam, phi) for lam, phi, _ in results], traces)


def with_overrides(config: SmcConfig, **kw) -> SmcConfig:
    return replace(config, **kw)
