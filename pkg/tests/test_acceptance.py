"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``criterion N: PASS/FAIL`` line; the lines are also
collected in the terminal summary.
"""
import time

import numpy as np
import pytest

from fklab import galerkin as g
from fklab import harness
from fklab.harness import Method, SweepConfig
from fklab.linalg import lu_solve, matexp
from fklab.model import PRESETS, preset
from fklab.smc import QuadratureRule, SmcConfig, resample_multinomial, smc_run

pytestmark = pytest.mark.acceptance

GRID = (0.2, 0.1, 0.05, 0.025, 0.0125)


def within(lo, x, hi):
    return lo <= x <= hi


def test_criterion_1_constant_weight(criterion):
    t0 = time.perf_counter()
    worst_g = worst_s = worst_f = 0.0
    for name in PRESETS:
        spec = preset(name).with_weight(0.7)
        for delta in (0.0, 0.5):
            for dt in (0.2, 0.05):
                lam, _ = g.scheme_eigen(spec, 30, dt, delta)
                worst_g = max(worst_g, abs(lam - 0.7))
                cfg = SmcConfig(M=200, dt=dt, T=10.0, realizations=2, seed=3,
                                rule=QuadratureRule(delta))
                worst_s = max(worst_s, abs(smc_run(spec, cfg).lambda_hat - 0.7))
        for p, delta in ((1, 0.0), (2, 0.5)):
            lc = g.leading_correction(spec, 30, p, delta)
            worst_f = max(worst_f, float(np.max(np.abs(lc.f_grid))))
    elapsed = time.perf_counter() - t0
    ok = worst_g <= 1e-12 and worst_s <= 1e-12 and worst_f <= 1e-10 and elapsed < 10
    criterion(1, ok, f"galerkin {worst_g:.1e}, smc {worst_s:.1e}, max|f| {worst_f:.1e}, "
                     f"{elapsed:.1f}s")


def test_criterion_2_delta_invariance(criterion):
    t0 = time.perf_counter()
    spread = 0.0
    for name in ("zero_potential", "strong_potential"):
        for dt in (0.2, 0.1, 0.05):
            lams = [g.scheme_eigen(preset(name), 30, dt, d)[0]
                    for d in (0.0, 0.25, 0.5, 0.75, 1.0)]
            spread = max(spread, max(lams) - min(lams))
    elapsed = time.perf_counter() - t0
    criterion(2, spread <= 1e-10 and elapsed < 30, f"spread {spread:.1e}, {elapsed:.1f}s")


def _slopes(dt_grid, targets):
    res = harness.run_sweep(SweepConfig(
        preset="zero_potential", dt_grid=dt_grid, targets=targets, N=30,
        methods=(Method("galerkin", "euler", 0.0), Method("galerkin", "euler", 0.5))))
    return {(k[1], k[3]): v[0] for k, v in res.fits.items()}


def test_criterion_3_convergence_orders(criterion):
    t0 = time.perf_counter()
    zero = preset("zero_potential")
    converged = abs(g.continuum_reference(zero, 30)[0] - g.continuum_reference(zero, 60)[0])
    s = _slopes(GRID, ("eigenvalue", "observable_average"))
    elapsed = time.perf_counter() - t0
    ok = (converged <= 1e-10
          and within(0.85, s[0.0, "observable_average"], 1.15)
          and within(1.8, s[0.5, "observable_average"], 2.2)
          and within(1.8, s[0.0, "eigenvalue"], 2.2)
          and within(1.8, s[0.5, "eigenvalue"], 2.2)
          and elapsed < 60)
    criterion(3, ok, f"avg d=0 {s[0.0, 'observable_average']:.3f}, "
                     f"avg d=1/2 {s[0.5, 'observable_average']:.3f}, "
                     f"eig d=0 {s[0.0, 'eigenvalue']:.3f}, eig d=1/2 {s[0.5, 'eigenvalue']:.3f}, "
                     f"N30-N60 {converged:.1e}, {elapsed:.1f}s")


def _richardson(p, delta):
    return harness.richardson_check("zero_potential", p, delta, dt_pair=(0.02, 0.01), N=30)


def test_criterion_4_average_leading_term(criterion):
    t0 = time.perf_counter()
    e1 = _richardson(1, 0.0).entries["observable_average"]
    e2 = _richardson(2, 0.5).entries["observable_average"]
    elapsed = time.perf_counter() - t0
    ok = (e1.deviation[1] <= 0.02 and e1.halving_ratio >= 1.7
          and e2.deviation[1] <= 0.05 and e2.halving_ratio >= 1.7 and elapsed < 60)
    criterion(4, ok, f"p=1 dev {e1.deviation[1]:.3%} ratio {e1.halving_ratio:.2f}; "
                     f"p=2 dev {e2.deviation[1]:.3%} ratio {e2.halving_ratio:.2f}; "
                     f"{elapsed:.1f}s")


def test_criterion_5_eigenvalue_leading_term(criterion):
    t0 = time.perf_counter()
    e1 = _richardson(1, 0.0).entries["eigenvalue"]
    e2 = _richardson(2, 0.5).entries["eigenvalue"]
    elapsed = time.perf_counter() - t0
    ok = e1.deviation[1] <= 0.02 and e2.deviation[1] <= 0.05 and elapsed < 60
    criterion(5, ok, f"p=1 theory {e1.theory:.2e} empirical {e1.empirical[1]:.4e} "
                     f"dev {e1.deviation[1]:.3g}; p=2 dev {e2.deviation[1]:.3%}; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_6_mc_galerkin_agreement(criterion):
    t0 = time.perf_counter()
    cfg = SmcConfig(M=5000, T=200.0, realizations=8, integrator="euler")
    rep = harness.compare_mc_galerkin("zero_potential", (0.2, 0.1, 0.05), cfg,
                                      deltas=(0.0, 0.5), N=30)
    elapsed = time.perf_counter() - t0
    ok = len(rep.rows) == 12 and not rep.flagged and elapsed < 180
    criterion(6, ok, f"max |z| {rep.max_abs_z:.2f} over {len(rep.rows)} z-scores, "
                     f"{elapsed:.1f}s")


def test_criterion_7_average_of_W_first_order(criterion):
    t0 = time.perf_counter()
    s = _slopes(GRID, ("eigenvalue", "average_of_W"))
    elapsed = time.perf_counter() - t0
    ok = (within(0.85, s[0.5, "average_of_W"], 1.15) and within(1.8, s[0.5, "eigenvalue"], 2.2)
          and elapsed < 30)
    criterion(7, ok, f"int W slope {s[0.5, 'average_of_W']:.3f}, "
                     f"eigenvalue slope {s[0.5, 'eigenvalue']:.3f}, {elapsed:.1f}s")


def test_criterion_8_measure_map_contraction(criterion):
    t0 = time.perf_counter()
    spec = preset("strong_potential")
    Q = g.scheme_matrix(spec, 30, 0.1, 0.5)
    _, fix = g.scheme_eigen(spec, 30, 0.1, 0.5)
    mu = g.CoeffVector(np.eye(61, dtype=complex)[30])
    tv = []
    for _ in range(200):
        mu = g.measure_map_apply(Q, mu)
        tv.append(g.grid_tv(mu, fix))
    head = np.array(tv[:10])
    ratio = float(np.exp(np.polyfit(np.arange(1, 11), np.log(head), 1)[0]))
    final = float(np.max(np.abs(mu.entries - fix.entries)))
    elapsed = time.perf_counter() - t0
    ok = ratio < 1 and final <= 1e-8 and elapsed < 10
    criterion(8, ok, f"geometric ratio {ratio:.3g}, n=200 distance {final:.1e}, "
                     f"TV {tv[-1]:.1e}, {elapsed:.1f}s")


def test_criterion_9_tu_corrected_average(criterion):
    t0 = time.perf_counter()
    spec = preset("zero_potential")
    diffs = []
    for dt in (0.1, 0.05):
        _, nu0 = g.scheme_eigen(spec, 30, dt, 0.0)
        _, nu5 = g.scheme_eigen(spec, 30, dt, 0.5)
        diffs.append(abs(g.tu_corrected_average(nu0, spec.phi, spec.W, dt)
                         - g.observable_average(nu5, spec.phi)))
    ratio = diffs[0] / diffs[1] if diffs[1] > 0 else float("inf")
    elapsed = time.perf_counter() - t0
    criterion(9, ratio >= 3.5 and elapsed < 10,
              f"|diff| {diffs[0]:.1e} -> {diffs[1]:.1e}, ratio {ratio:.2f}, {elapsed:.1f}s")


def _taylor60(A):
    nrm = np.linalg.norm(A, 1)
    s = max(0, int(np.ceil(np.log2(nrm))) + 1) if nrm > 0 else 0
    B = A / 2**s
    term = np.eye(A.shape[0], dtype=complex)
    out = term.copy()
    for k in range(1, 61):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def test_criterion_10_kernel_oracles(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    exp_err = lu_res = 0.0
    for _ in range(20):
        A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        ref = _taylor60(A)
        exp_err = max(exp_err, np.max(np.abs(matexp(A) - ref)) / max(1.0, np.max(np.abs(ref))))
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x = lu_solve(A, b)
        lu_res = max(lu_res, float(np.max(np.abs(A @ x - b))))
    # categorical frequencies: 10^5 replicas in 5 classes of unequal total weight
    M = 100_000
    labels = np.arange(M) % 5
    w = np.array([0.1, 0.5, 1.0, 2.0, 3.4])[labels] * (1 + 0.5 * rng.random(M))
    probs = np.bincount(labels, weights=w) / w.sum()
    counts = np.bincount(resample_multinomial(w, labels, key=77), minlength=5)
    z = (counts - M * probs) / np.sqrt(M * probs * (1 - probs))
    elapsed = time.perf_counter() - t0
    ok = exp_err <= 1e-10 and lu_res <= 1e-10 and np.max(np.abs(z)) <= 4 and elapsed < 10
    criterion(10, ok, f"matexp {exp_err:.1e}, lu residual {lu_res:.1e}, "
                      f"resampler max|z| {np.max(np.abs(z)):.2f}, {elapsed:.1f}s")
