"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical error.  Failures
print one JSON object on standard error, prefixed with ``fklab-error:``.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import artifacts, galerkin, harness
from .config import parse_config
from .errors import ConfigurationError, FKLabError, InsufficientDataError, NumericalError
from .model import preset
from .smc import smc_run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("run-mc", "run-galerkin", "sweep", "richardson", "compare")


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fklab",
        description="Feynman-Kac timestep-bias laboratory: Monte Carlo and Galerkin solvers.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "run-mc": "population Monte Carlo estimate at one timestep",
        "run-galerkin": "Galerkin scheme and continuum quantities at one timestep",
        "sweep": "timestep sweep with error rows, order fits and a log-log plot",
        "richardson": "compare empirical and predicted leading error coefficients",
        "compare": "z-scores of Monte Carlo against same-timestep Galerkin values",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a configuration key (repeatable)")
        p.add_argument("--seed", type=_u64, help="override the random seed")
        p.add_argument("--threads", type=_positive_int, default=1, help="worker threads")
    return parser


def _error_line(kind: str, exc: Exception) -> str:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "path", "step", "residual"):
        v = getattr(exc, attr, None)
        if v is not None:
            payload[attr] = v
    return "fklab-error: " + json.dumps(payload, sort_keys=True)


def _out_file(out: Path, cfg, name: str) -> Path:
    return out / f"{cfg.output['prefix']}{name}"


def cmd_run_mc(cfg, out: Path, threads: int) -> list:
    spec = preset(cfg.preset)
    est = smc_run(spec, cfg.smc, threads=threads)
    s = cfg.smc
    rows = [
        ("mc-" + s.integrator.value, s.delta, s.integrator.value, s.dt, "eigenvalue",
         est.lambda_hat, None, None, est.stderr_lambda, None, None),
        ("mc-" + s.integrator.value, s.delta, s.integrator.value, s.dt, "observable_average",
         est.phi_hat, None, None, est.stderr_phi, None, None),
    ]
    written = []
    if cfg.output["csv"]:
        written.append(artifacts.write_table(_out_file(out, cfg, "run_mc.csv"),
                                             artifacts.CSV_HEADER, rows))
        written.append(artifacts.write_table(
            _out_file(out, cfg, "run_mc_realizations.csv"), ("realization", "lambda_hat", "phi_hat"),
            [(i, a, b) for i, (a, b) in enumerate(est.per_realization)]))
    print(f"lambda_hat = {est.lambda_hat!r} +/- {est.stderr_lambda!r}")
    print(f"phi_hat    = {est.phi_hat!r} +/- {est.stderr_phi!r}")
    return written


def cmd_run_galerkin(cfg, out: Path, threads: int) -> list:
    spec = preset(cfg.preset)
    delta = cfg.smc.delta
    rep = galerkin.galerkin_report(spec, cfg.N, cfg.dt, delta)
    rows = [
        ("galerkin", delta, "exact", cfg.dt, "eigenvalue", rep.lambda_dt, rep.lambda0,
         abs(rep.lambda_dt - rep.lambda0), None, None, None),
        ("galerkin", delta, "exact", cfg.dt, "observable_average", rep.averages["phi"],
         rep.averages["phi@0"], abs(rep.averages["phi"] - rep.averages["phi@0"]),
         None, None, None),
        ("galerkin", delta, "exact", cfg.dt, "average_of_W", rep.averages["W"], rep.lambda0,
         abs(rep.averages["W"] - rep.lambda0), None, None, None),
    ]
    written = []
    if cfg.output["csv"]:
        written.append(artifacts.write_table(_out_file(out, cfg, "run_galerkin.csv"),
                                             artifacts.CSV_HEADER, rows))
    print(f"lambda0 = {rep.lambda0!r}")
    print(f"lambda_dt = {rep.lambda_dt!r}")
    for k, v in rep.averages.items():
        print(f"average[{k}] = {v!r}")
    return written


def cmd_sweep(cfg, out: Path, threads: int) -> list:
    result = harness.run_sweep(replace(cfg.sweep, threads=threads))
    written = []
    if cfg.output["csv"]:
        written.append(artifacts.emit_csv(result, _out_file(out, cfg, "sweep.csv")))
    if cfg.output["svg"]:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            p = artifacts.emit_svg_loglog(result, _out_file(out, cfg, "sweep.svg"),
                                          title=f"{cfg.preset}: error vs dt")
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if p is not None:
            written.append(p)
    for key, fit in result.fits.items():
        method, delta, integ, target = key
        desc = "n/a" if fit is None else f"slope {fit[0]:.4f}, r2 {fit[1]:.4f}"
        print(f"{method} delta={delta:g} {integ} {target}: {desc}")
    failed = [r for r in result.rows if not r.ok]
    for r in failed:
        print(f"warning: cell {r.method} dt={r.dt!r} failed: {r.failure}", file=sys.stderr)
    return written


def cmd_richardson(cfg, out: Path, threads: int) -> list:
    rep = harness.richardson_check(cfg.preset, cfg.p, cfg.smc.delta, dt_pair=cfg.dt_pair, N=cfg.N)
    header = ("target", "p", "delta", "dt", "empirical", "theory", "relative_deviation",
              "halving_ratio")
    rows = []
    for t, e in rep.entries.items():
        for dt, emp, dev in zip(rep.dt_pair, e.empirical, e.deviation):
            rows.append((t, rep.p, rep.delta, dt, emp, e.theory, dev, e.halving_ratio))
            print(f"{t} dt={dt!r}: empirical {emp!r} theory {e.theory!r} deviation {dev!r}")
    written = []
    if cfg.output["csv"]:
        written.append(artifacts.write_table(_out_file(out, cfg, "richardson.csv"), header, rows))
    return written


def cmd_compare(cfg, out: Path, threads: int) -> list:
    rep = harness.compare_mc_galerkin(cfg.preset, cfg.sweep.dt_grid, cfg.smc, deltas=cfg.deltas,
                                      N=cfg.N, threads=threads)
    header = ("dt", "delta", "target", "mc", "stderr", "galerkin", "z", "flagged")
    rows = [(r.dt, r.delta, r.target, r.mc, r.stderr, r.galerkin, r.z, str(r.flagged).lower())
            for r in rep.rows]
    for r in rep.rows:
        print(f"dt={r.dt!r} delta={r.delta!r} {r.target}: z = {r.z:.3f}"
              + ("  FLAGGED" if r.flagged else ""))
    written = []
    if cfg.output["csv"]:
        written.append(artifacts.write_table(_out_file(out, cfg, "compare.csv"), header, rows))
    return written


HANDLERS = {
    "run-mc": cmd_run_mc,
    "run-galerkin": cmd_run_galerkin,
    "sweep": cmd_sweep,
    "richardson": cmd_richardson,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = parse_config(args.config, overrides)
        out = args.out
        if out.exists() and not out.is_dir():
            raise ConfigurationError("output path exists and is not a directory", key="--out",
                                     path=str(out))
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"cannot create output directory: {exc.strerror}",
                                     key="--out", path=str(out)) from None
        HANDLERS[args.command](cfg, out, args.threads)
    except ConfigurationError as exc:
        print(_error_line("configuration", exc), file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InsufficientDataError) as exc:
        print(_error_line("numerical", exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except FKLabError as exc:
        print(_error_line("runtime", exc), file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
