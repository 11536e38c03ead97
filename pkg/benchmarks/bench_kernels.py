"""Compare the compiled SMC step kernel with the numpy fallback.

Runs whole realizations (move, weigh, resample) with each backend on the
same configuration, checks that the results agree, and prints wall-clock
times per step and the speed-up.

    python benchmarks/bench_kernels.py --M 1000 5000 --steps 200
"""
import argparse
import time

from fklab import _backend
from fklab.model import PRESETS, preset
from fklab.smc import QuadratureRule, SmcConfig, run_realization


def time_backend(spec, cfg, backend, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = run_realization(spec, cfg, 0, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, result[:2]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, nargs="+", default=[1000, 5000])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--dt", type=float, default=0.05)
    ap.add_argument("--preset", choices=PRESETS, default="strong_potential")
    ap.add_argument("--integrator", choices=["euler", "weak2"], default="euler")
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    if "compiled" not in _backend.BACKENDS:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1
    spec = preset(args.preset)
    print(f"{args.preset}, {args.integrator}, delta={args.delta}, dt={args.dt}, "
          f"{args.steps} steps, best of {args.repeats}")
    print(f"{'M':>8} {'compiled us/step':>17} {'python us/step':>15} {'speed-up':>9} "
          f"{'max |diff|':>11}")
    for M in args.M:
        cfg = SmcConfig(M=M, dt=args.dt, T=args.steps * args.dt, realizations=1,
                        integrator=args.integrator, rule=QuadratureRule(args.delta))
        tc, rc = time_backend(spec, cfg, "compiled", args.repeats)
        tp, rp = time_backend(spec, cfg, "python", args.repeats)
        diff = max(abs(a - b) for a, b in zip(rc, rp))
        print(f"{M:>8} {1e6 * tc / args.steps:>17.1f} {1e6 * tp / args.steps:>15.1f} "
              f"{tp / tc:>8.1f}x {diff:>11.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
