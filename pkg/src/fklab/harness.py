"""Timestep sweeps, order fits and the leading-term (Richardson) checks."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import galerkin
from .errors import ConfigurationError, FKLabError, InsufficientDataError
from .integrators import IntegratorKind
from .model import ProblemSpec, preset as load_preset
from .smc import QuadratureRule, SmcConfig, smc_run

DEFAULT_DT_GRID = (0.2, 0.1, 0.05, 0.025, 0.0125)
TARGETS = ("eigenvalue", "observable_average", "average_of_W")
REFERENCES = ("galerkin_dt0", "galerkin_same_dt")
SOURCES = ("mc", "galerkin")
DETERMINISTIC_FLOOR = 1e-11
NOISE_FACTOR = 10.0


def resolve_spec(spec) -> ProblemSpec:
    return spec if isinstance(spec, ProblemSpec) else load_preset(spec)


@dataclass(frozen=True)
class Method:
    source: str = "galerkin"
    integrator: IntegratorKind = IntegratorKind.EULER
    delta: float = 0.0

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ConfigurationError(f"unknown method source {self.source!r}", key="source")
        object.__setattr__(self, "integrator", IntegratorKind.parse(self.integrator))
        QuadratureRule(self.delta)  # validates the range

    @property
    def label(self) -> str:
        if self.source == "galerkin":
            return "galerkin"
        return f"mc-{self.integrator.value}"

    @property
    def integrator_label(self) -> str:
        # Galerkin rows use the exact semigroup, not a discretized chain
        return self.integrator.value if self.source == "mc" else "exact"

    @property
    def stochastic(self) -> bool:
        return self.source == "mc"


@dataclass(frozen=True)
class SweepConfig:
    preset: str | ProblemSpec = "zero_potential"
    dt_grid: tuple = DEFAULT_DT_GRID
    methods: tuple = (Method(),)
    targets: tuple = ("eigenvalue", "observable_average")
    reference: str = "galerkin_dt0"
    smc: SmcConfig = field(default_factory=SmcConfig)
    N: int = galerkin.DEFAULT_N
    threads: int = 1

    def __post_init__(self):
        grid = tuple(float(x) for x in self.dt_grid)
        if not grid or any(not (x > 0 and math.isfinite(x)) for x in grid):
            raise ConfigurationError("dt_grid entries must be positive", key="dt_grid")
        if any(a <= b for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("dt_grid must be strictly decreasing", key="dt_grid")
        object.__setattr__(self, "dt_grid", grid)
        object.__setattr__(self, "methods", tuple(self.methods))
        for t in self.targets:
            if t not in TARGETS:
                raise ConfigurationError(f"unknown target {t!r}", key="targets")
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.reference not in REFERENCES:
            raise ConfigurationError(f"unknown reference {self.reference!r}", key="reference")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError("N must be a positive integer", key="N")


@dataclass
class SweepRow:
    method: str
    delta: float
    integrator: str
    dt: float
    target: str
    value: float
    reference: float
    error: float
    stderr: float | None = None
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class SweepResult:
    rows: list
    fits: dict = field(default_factory=dict)

    def fit_for(self, row: SweepRow):
        return self.fits.get((row.method, row.delta, row.integrator, row.target))

    def series(self, method: str, delta: float, target: str):
        return [r for r in self.rows
                if r.method == method and r.delta == delta and r.target == target]


def fit_order(rows):
    """Least-squares slope of ``log(error)`` against ``log(dt)``.

    Parameters
    ----------
    rows : iterable of (dt, error)

    Returns
    -------
    (slope, r2)
    """
    pts = [(float(dt), float(err)) for dt, err in rows
           if dt > 0 and err > 0 and math.isfinite(err)]
    if len({dt for dt, _ in pts}) < 2:
        raise InsufficientDataError("order fit needs at least two rows with positive error")
    x = np.log([dt for dt, _ in pts])
    y = np.log([err for _, err in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def usable_for_fit(row: SweepRow) -> bool:
    if not row.ok or not math.isfinite(row.error):
        return False
    if row.stderr is not None:
        return row.error > NOISE_FACTOR * row.stderr
    return row.error > DETERMINISTIC_FLOOR


class _References:
    """Galerkin reference values, computed lazily and cached per key."""

    def __init__(self, spec: ProblemSpec, N: int):
        self.spec, self.N = spec, N
        self._cont = None
        self._scheme = {}

    def continuum(self):
        if self._cont is None:
            lam, nu, _ = galerkin.continuum_reference(self.spec, self.N)
            self._cont = {
                "eigenvalue": lam,
                "observable_average": galerkin.observable_average(nu, self.spec.phi),
                # the W-average is compared with the eigenvalue itself
                "average_of_W": lam,
            }
        return self._cont

    def scheme(self, dt: float, delta: float):
        key = (dt, delta)
        if key not in self._scheme:
            lam, nu = galerkin.scheme_eigen(self.spec, self.N, dt, delta)
            self._scheme[key] = {
                "eigenvalue": lam,
                "observable_average": galerkin.observable_average(nu, self.spec.phi),
                "average_of_W": galerkin.observable_average(nu, self.spec.W),
            }
        return self._scheme[key]


def _mc_values(spec, cfg: SmcConfig, method: Method, dt: float, targets, threads=1):
    cfg = replace(cfg, dt=dt, integrator=method.integrator, rule=QuadratureRule(method.delta))
    out = {}
    need_phi = {"eigenvalue", "observable_average"} & set(targets)
    if need_phi:
        est = smc_run(spec, cfg, threads=threads)
        out["eigenvalue"] = (est.lambda_hat, est.stderr_lambda)
        out["observable_average"] = (est.phi_hat, est.stderr_phi)
    if "average_of_W" in targets:
        est = smc_run(replace(spec, phi=spec.W), cfg, threads=threads)
        out["average_of_W"] = (est.phi_hat, est.stderr_phi)
    return out


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate every (method, dt) cell and fit convergence orders.

    Cells run on a bounded thread pool and are reduced in cell order, so
    the result does not depend on ``config.threads``.  Failing cells are
    kept as rows carrying a failure marker.
    """
    spec = resolve_spec(config.preset)
    refs = _References(spec, config.N)
    cells = [(m, dt) for m in config.methods for dt in config.dt_grid]

    def evaluate(cell):
        method, dt = cell
        try:
            if method.source == "galerkin":
                vals = refs.scheme(dt, method.delta)
                values = {t: (vals[t], None) for t in config.targets}
            else:
                values = _mc_values(spec, config.smc, method, dt, config.targets)
            if config.reference == "galerkin_dt0":
                reference = refs.continuum()
            else:
                reference = refs.scheme(dt, method.delta)
        except FKLabError as exc:
            return [SweepRow(method.label, method.delta, method.integrator_label, dt, t,
                             math.nan, math.nan, math.nan, None,
                             failure=f"{type(exc).__name__}: {exc}") for t in config.targets]
        rows = []
        for t in config.targets:
            value, se = values[t]
            ref = reference[t]
            rows.append(SweepRow(method.label, method.delta, method.integrator_label, dt, t,
                                 float(value), float(ref), abs(float(value) - float(ref)),
                                 None if se is None else float(se)))
        return rows

    # reference values are shared; fill the continuum cache before fanning out
    if config.reference == "galerkin_dt0":
        try:
            refs.continuum()
        except FKLabError:
            pass
    if config.threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            nested = list(pool.map(evaluate, cells))
    else:
        nested = [evaluate(c) for c in cells]

    rows = [r for group in nested for r in group]
    rows.sort(key=lambda r: (_method_order(config, r), -r.dt, config.targets.index(r.target)))
    return SweepResult(rows, _fit_all(rows))


def _method_order(config: SweepConfig, row: SweepRow) -> int:
    for i, m in enumerate(config.methods):
        if m.label == row.method and m.delta == row.delta and m.integrator_label == row.integrator:
            return i
    return len(config.methods)


def _fit_all(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.delta, r.integrator, r.target), []).append(r)
    fits = {}
    for key, group in groups.items():
        pts = [(r.dt, r.error) for r in group if usable_for_fit(r)]
        try:
            fits[key] = fit_order(pts)
        except InsufficientDataError:
            fits[key] = None
    return fits


@dataclass
class RichardsonEntry:
    target: str
    theory: float
    empirical: tuple
    deviation: tuple
    halving_ratio: float


@dataclass
class RichardsonReport:
    p: int
    delta: float
    dt_pair: tuple
    entries: dict


def _relative(emp: float, theory: float) -> float:
    if theory == 0.0:
        return 0.0 if emp == 0.0 else math.inf
    return abs(emp - theory) / abs(theory)


def richardson_check(preset, p: int = 1, delta: float = 0.0, phi=None,
                     dt_pair=(0.02, 0.01), N: int = galerkin.DEFAULT_N) -> RichardsonReport:
    """Compare empirical leading coefficients ``(value_dt - value_0) / dt^p``
    with the ones predicted by :func:`fklab.galerkin.leading_correction`.

    Both the average of ``phi`` (default: the preset observable) and the
    eigenvalue are checked at the two timesteps of ``dt_pair``.
    """
    spec = resolve_spec(preset)
    phi = phi or spec.phi
    dts = tuple(float(x) for x in dt_pair)
    if len(dts) != 2 or not dts[0] > dts[1] > 0:
        raise ConfigurationError("dt_pair must be (dt, smaller dt)", key="dt_pair")
    lc = galerkin.leading_correction(spec, N, p, delta)
    avg0 = galerkin.observable_average(lc.nu_W, phi)
    theory = {"observable_average": lc.correction(phi),
              "eigenvalue": lc.eigenvalue_coefficient}
    emp = {"observable_average": [], "eigenvalue": []}
    for dt in dts:
        lam, nu = galerkin.scheme_eigen(spec, N, dt, delta)
        emp["observable_average"].append((galerkin.observable_average(nu, phi) - avg0) / dt**p)
        emp["eigenvalue"].append((lam - lc.lam) / dt**p)
    entries = {}
    for t in theory:
        devs = tuple(_relative(e, theory[t]) for e in emp[t])
        ratio = devs[0] / devs[1] if devs[1] > 0 else math.inf
        entries[t] = RichardsonEntry(t, float(theory[t]), tuple(emp[t]), devs, ratio)
    return RichardsonReport(p, float(delta), dts, entries)


@dataclass
class ComparisonRow:
    dt: float
    delta: float
    target: str
    mc: float
    stderr: float
    galerkin: float
    z: float

    @property
    def flagged(self) -> bool:
        return not abs(self.z) <= 4.0


@dataclass
class ComparisonReport:
    rows: list

    @property
    def flagged(self):
        return [r for r in self.rows if r.flagged]

    @property
    def max_abs_z(self) -> float:
        return max((abs(r.z) for r in self.rows), default=0.0)


def _zscore(diff: float, se: float) -> float:
    if diff == 0.0:
        return 0.0
    if not se > 0:
        return math.inf
    return diff / se


def compare_mc_galerkin(preset, dt_grid=(0.2, 0.1, 0.05), smc_template: SmcConfig | None = None,
                        deltas=(0.0, 0.5), N: int = galerkin.DEFAULT_N,
                        threads: int = 1) -> ComparisonReport:
    """z-scores of the Monte Carlo estimates against the same-dt Galerkin values."""
    spec = resolve_spec(preset)
    template = smc_template or SmcConfig()
    rows = []
    for dt in dt_grid:
        for delta in deltas:
            lam_g, nu = galerkin.scheme_eigen(spec, N, dt, delta)
            phi_g = galerkin.observable_average(nu, spec.phi)
            cfg = replace(template, dt=float(dt), rule=QuadratureRule(delta))
            est = smc_run(spec, cfg, threads=threads)
            rows.append(ComparisonRow(dt, delta, "eigenvalue", est.lambda_hat, est.stderr_lambda,
                                      lam_g, _zscore(est.lambda_hat - lam_g, est.stderr_lambda)))
            rows.append(ComparisonRow(dt, delta, "observable_average", est.phi_hat,
                                      est.stderr_phi, phi_g,
                                      _zscore(est.phi_hat - phi_g, est.stderr_phi)))
    return ComparisonReport(rows)
