"""JSON experiment configuration: defaults, overrides and fail-closed validation.

Schema (all keys optional)::

    {
      "preset": "zero_potential",          # zero_potential | strong_potential | weak_potential
      "N": 30,                              # Galerkin truncation
      "dt": 0.1,                            # timestep for run-mc / run-galerkin
      "dt_grid": [0.2, 0.1, 0.05, 0.025, 0.0125],
      "M": 5000, "T": 200.0, "burn_in": 0.5,
      "seed": 20190101, "realizations": 8,
      "integrator": "euler",                # euler | weak2
      "delta": 0.0,                         # weight placement in [0, 1]
      "deltas": [0.0, 0.5],                 # compare: rules to test
      "methods": [{"source": "galerkin", "integrator": "euler", "delta": 0.0}],
      "targets": ["eigenvalue", "observable_average"],
      "reference": "galerkin_dt0",          # galerkin_dt0 | galerkin_same_dt
      "p": 1, "dt_pair": [0.02, 0.01],      # richardson
      "output": {"csv": true, "svg": true, "prefix": ""}
    }
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .harness import DEFAULT_DT_GRID, REFERENCES, TARGETS, Method, SweepConfig
from .integrators import IntegratorKind
from .model import PRESETS
from .smc import QuadratureRule, SmcConfig

DEFAULTS = {
    "preset": "zero_potential",
    "N": 30,
    "dt": 0.1,
    "dt_grid": list(DEFAULT_DT_GRID),
    "M": 5000,
    "T": 200.0,
    "burn_in": 0.5,
    "seed": 20190101,
    "realizations": 8,
    "integrator": "euler",
    "delta": 0.0,
    "deltas": [0.0, 0.5],
    "methods": None,
    "targets": ["eigenvalue", "observable_average"],
    "reference": "galerkin_dt0",
    "p": 1,
    "dt_pair": [0.02, 0.01],
    "output": {"csv": True, "svg": True, "prefix": ""},
}
OUTPUT_KEYS = ("csv", "svg", "prefix")
METHOD_KEYS = ("source", "integrator", "delta")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    preset: str
    N: int
    dt: float
    smc: SmcConfig
    sweep: SweepConfig
    deltas: tuple
    p: int
    dt_pair: tuple
    output: dict
    path: str | None = None


def _number(raw, key, path, *, integer=False, lo=None, hi=None, lo_open=False):
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError("expected a number", key=key, path=path)
    if integer and int(v) != v:
        raise ConfigurationError("expected an integer", key=key, path=path)
    if not math.isfinite(v):
        raise ConfigurationError("expected a finite number", key=key, path=path)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigurationError(f"value {v!r} out of range", key=key, path=path)
    if hi is not None and v > hi:
        raise ConfigurationError(f"value {v!r} out of range", key=key, path=path)
    return int(v) if integer else float(v)


def _float_list(raw, key, path):
    v = raw[key]
    if not isinstance(v, list) or not v:
        raise ConfigurationError("expected a non-empty list of numbers", key=key, path=path)
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigurationError("expected a non-empty list of numbers", key=key, path=path)
        out.append(float(x))
    return out


def _check(fn, key, path):
    try:
        return fn()
    except ConfigurationError as exc:
        qualified = key if not exc.key else f"{key}.{exc.key}" if key.startswith("methods[") \
            else exc.key
        raise ConfigurationError(exc.message, key=qualified, path=path) from None


def validate(data: dict, path=None) -> ExperimentConfig:
    """Merge ``data`` over the defaults and validate every field."""
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a JSON object", path=path)
    for key in data:
        if key not in DEFAULTS:
            raise ConfigurationError("unknown configuration key", key=key, path=path)
    raw = copy.deepcopy(DEFAULTS)
    for key, value in data.items():
        if key == "output" and isinstance(value, dict):
            for k in value:
                if k not in OUTPUT_KEYS:
                    raise ConfigurationError("unknown configuration key", key=f"output.{k}",
                                             path=path)
            raw["output"].update(value)
        else:
            raw[key] = value

    if raw["preset"] not in PRESETS:
        raise ConfigurationError(f"unknown preset {raw['preset']!r}", key="preset", path=path)
    N = _number(raw, "N", path, integer=True, lo=1)
    dt = _number(raw, "dt", path, lo=0, lo_open=True)
    M = _number(raw, "M", path, integer=True, lo=1)
    T = _number(raw, "T", path, lo=0, lo_open=True)
    burn = _number(raw, "burn_in", path, lo=0)
    if burn >= 1:
        raise ConfigurationError("value out of range", key="burn_in", path=path)
    seed = _number(raw, "seed", path, integer=True, lo=0, hi=2**64 - 1)
    R = _number(raw, "realizations", path, integer=True, lo=1)
    delta = _number(raw, "delta", path, lo=0, hi=1)
    deltas = _float_list(raw, "deltas", path)
    if any(not 0 <= d <= 1 for d in deltas):
        raise ConfigurationError("value out of range", key="deltas", path=path)
    if raw["integrator"] not in [k.value for k in IntegratorKind]:
        raise ConfigurationError(f"unknown integrator {raw['integrator']!r}", key="integrator",
                                 path=path)
    grid = _float_list(raw, "dt_grid", path)
    targets = raw["targets"]
    if not isinstance(targets, list) or not targets or any(t not in TARGETS for t in targets):
        raise ConfigurationError(f"targets must be a non-empty subset of {list(TARGETS)}",
                                 key="targets", path=path)
    if raw["reference"] not in REFERENCES:
        raise ConfigurationError(f"unknown reference {raw['reference']!r}", key="reference",
                                 path=path)
    p = _number(raw, "p", path, integer=True, lo=1, hi=2)
    dt_pair = _float_list(raw, "dt_pair", path)
    if len(dt_pair) != 2 or not dt_pair[0] > dt_pair[1] > 0:
        raise ConfigurationError("dt_pair must be [dt, smaller dt]", key="dt_pair", path=path)
    out = raw["output"]
    if not isinstance(out, dict) or not isinstance(out.get("csv"), bool) \
            or not isinstance(out.get("svg"), bool) or not isinstance(out.get("prefix"), str):
        raise ConfigurationError("output needs boolean csv/svg and string prefix",
                                 key="output", path=path)
    if "/" in out["prefix"] or "\\" in out["prefix"] or ".." in out["prefix"]:
        raise ConfigurationError("prefix must be a plain file-name prefix", key="output.prefix",
                                 path=path)

    smc = _check(lambda: SmcConfig(M=M, dt=dt, T=T, burn_in_fraction=burn, seed=seed,
                                   integrator=raw["integrator"], rule=QuadratureRule(delta),
                                   realizations=R), "smc", path)

    methods_raw = raw["methods"]
    if methods_raw is None:
        methods_raw = [{"source": "galerkin", "delta": delta}]
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigurationError("methods must be a non-empty list", key="methods", path=path)
    methods = []
    for i, m in enumerate(methods_raw):
        key = f"methods[{i}]"
        if not isinstance(m, dict) or any(k not in METHOD_KEYS for k in m):
            raise ConfigurationError(f"entries take keys {list(METHOD_KEYS)}", key=key, path=path)
        m = {"source": "galerkin", "integrator": raw["integrator"], "delta": delta, **m}
        methods.append(_check(lambda m=m: Method(m["source"], m["integrator"],
                                                 float(m["delta"])), key, path))

    sweep = _check(lambda: SweepConfig(preset=raw["preset"], dt_grid=tuple(grid),
                                       methods=tuple(methods), targets=tuple(targets),
                                       reference=raw["reference"], smc=smc, N=N), "dt_grid", path)
    return ExperimentConfig(raw=raw, preset=raw["preset"], N=N, dt=dt, smc=smc, sweep=sweep,
                            deltas=tuple(deltas), p=p, dt_pair=tuple(dt_pair), output=out,
                            path=None if path is None else str(path))


def parse_override(text: str):
    """``key=value`` with ``value`` read as JSON when possible, else as a string.

    Dotted keys address the ``output`` section (``output.svg=false``).
    """
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} is not key=value", key=text)
    key, value = text.split("=", 1)
    key = key.strip()
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key, parsed


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data)
    for text in overrides or ():
        key, value = parse_override(text)
        if "." in key:
            head, tail = key.split(".", 1)
            section = data.setdefault(head, {})
            if not isinstance(section, dict):
                raise ConfigurationError("cannot set a field of a non-object", key=key)
            section[tail] = value
        else:
            data[key] = value
    return data


def load_json(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationError("configuration file not found", path=str(p)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read configuration: {exc}", path=str(p)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON: {exc}", path=str(p)) from None


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    """Load, override and validate a configuration; ``path=None`` uses defaults only."""
    data = load_json(path) if path is not None else {}
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a JSON object", path=path)
    return validate(apply_overrides(data, overrides), path=path)
