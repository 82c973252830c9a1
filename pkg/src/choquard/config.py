"""JSON run configuration: schema, defaults and conversion to solver objects."""

from __future__ import annotations

import copy
import difflib
import json
import math
from pathlib import Path

from .experiments import BatteryConfig, OracleConfig
from .models import NONLIN_VARIANTS, POTENTIAL_VARIANTS
from .solver import SolveConfig


class ConfigError(ValueError):
    pass


_REQUIRED = object()

SCHEMA = {
    "alpha": _REQUIRED,
    "lambda": 1.0,
    "eps": 0.0,
    "seed": 0,
    "grid": {"N": _REQUIRED, "L": _REQUIRED, "n": _REQUIRED},
    "potential": {"variant": _REQUIRED, "a": None, "b": None, "beta": None, "Vinf": None, "radii": None,
                  "values": None, "theta": None, "theta_p": None, "theta_pp": None, "R_bar": None},
    "nonlinearity": {"variant": _REQUIRED, "p": None, "q": None, "c1": 1.0, "c2": 1.0, "s0": 1.0},
    "solver": {"amplitude": 1.0, "widths": [1.5], "center": None, "init_field": None, "noise": 0.0,
               "max_iter": 400, "step0": 1.0, "max_step": 16.0, "max_halvings": 40, "tol_energy": 1e-10,
               "tol_poh": 1e-7, "tol_grad": 1e-5, "kernel": "auto"},
    "sweep": {"eps": [1.0, 0.5, 0.25], "lambda": [0.5, 0.625, 0.75, 0.875, 1.0], "warm_start": True,
              "path_potential": None},
    "verify": {"seed": 0, "elementary_samples": 10000, "identity_samples": 1000, "key_fields": 100,
               "key_grid": [3, 12.0, 24], "hardy_fields": 20, "riesz_fields": 5, "solution": None,
               "checks": ["elementary", "identity", "key_inequality", "hardy", "riesz_direct", "hls_ratio",
                          "pohozaev"]},
    "oracle": {"R_max": 30.0, "dr": 0.005, "mass": 30.0, "mixing": 0.5, "tol": 1e-12, "max_iter": 2000},
}


def _suggest(key: str, options) -> str:
    close = difflib.get_close_matches(key, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _merge(schema: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    out = {}
    for key in given:
        if key not in schema:
            raise ConfigError(f"{path}{key}: unknown key{_suggest(key, schema)}")
    for key, default in schema.items():
        if isinstance(default, dict):
            out[key] = _merge(default, given.get(key, {}), f"{path}{key}.")
        elif key in given:
            out[key] = copy.deepcopy(given[key])
        elif default is _REQUIRED:
            raise ConfigError(f"{path}{key}: required")
        else:
            out[key] = copy.deepcopy(default)
    return out


def _number(cfg, path, cond, msg):
    sec, _, key = path.rpartition(".")
    v = cfg[sec][key] if sec else cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or not cond(v):
        raise ConfigError(f"{path}: {msg} (got {v!r})")
    return v


def _validate(cfg: dict) -> None:
    N = _number(cfg, "grid.N", lambda v: int(v) == v and 2 <= v <= 4, "dimension must be an integer in [2, 4]")
    _number(cfg, "grid.L", lambda v: v > 0, "box length must be positive")
    _number(cfg, "grid.n", lambda v: int(v) == v and v >= 8 and v % 2 == 0,
            "points per axis must be an even integer >= 8")
    _number(cfg, "alpha", lambda v: 0 < v < N, f"Riesz order must satisfy 0 < alpha < N = {N}")
    _number(cfg, "lambda", lambda v: 0.5 <= v <= 1, "lambda must lie in [1/2, 1]")
    _number(cfg, "eps", lambda v: v >= 0, "eps must be nonnegative")
    _number(cfg, "seed", lambda v: int(v) == v and 0 <= v < 2**64, "seed must be an unsigned 64-bit integer")
    pv = cfg["potential"]["variant"]
    if pv not in POTENTIAL_VARIANTS:
        raise ConfigError(f"potential.variant: unknown {pv!r}{_suggest(str(pv), POTENTIAL_VARIANTS)}")
    Vinf = cfg["potential"]["Vinf"]
    if pv in ("constant", "user_table") and not (isinstance(Vinf, (int, float)) and Vinf > 0):
        raise ConfigError("potential.Vinf: must be positive (V1 requires V_inf > 0)")
    nv = cfg["nonlinearity"]["variant"]
    if nv not in NONLIN_VARIANTS + ("power",):
        raise ConfigError(f"nonlinearity.variant: unknown {nv!r}{_suggest(str(nv), NONLIN_VARIANTS)}")
    for key in ("eps", "lambda"):
        vals = cfg["sweep"][key]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep.{key}: expected a nonempty list")
    if any(not 0.5 <= x <= 1 for x in cfg["sweep"]["lambda"]):
        raise ConfigError("sweep.lambda: values must lie in [1/2, 1]")
    if any(not x > 0 for x in cfg["sweep"]["eps"]):
        raise ConfigError("sweep.eps: values must be positive")
    s = cfg["solver"]
    for key in ("tol_energy", "tol_poh", "tol_grad"):
        _number(cfg, f"solver.{key}", lambda v: v > 0, "tolerance must be positive")
    h = cfg["grid"]["L"] / cfg["grid"]["n"]
    if not isinstance(s["widths"], list) or not s["widths"]:
        raise ConfigError("solver.widths: expected a nonempty list")
    for w in s["widths"]:
        if not (isinstance(w, (int, float)) and w > 2 * h):
            raise ConfigError(f"solver.widths: width {w!r} must exceed two grid spacings ({2 * h})")
    if s["center"] is not None and len(s["center"]) != N:
        raise ConfigError(f"solver.center: expected {N} coordinates")


def resolve(raw: dict) -> dict:
    """Merge defaults into ``raw`` and validate; the result re-resolves to itself."""
    cfg = _merge(SCHEMA, raw, "")
    _validate(cfg)
    cfg["grid"]["N"] = int(cfg["grid"]["N"])
    cfg["grid"]["n"] = int(cfg["grid"]["n"])
    cfg["seed"] = int(cfg["seed"])
    return cfg


def parse_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return resolve(raw)


def _strip_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def solve_config(cfg: dict, seed: int | None = None) -> SolveConfig:
    s = cfg["solver"]
    try:
        return SolveConfig(
            N=cfg["grid"]["N"], L=float(cfg["grid"]["L"]), n=cfg["grid"]["n"], alpha=float(cfg["alpha"]),
            potential=_strip_none(cfg["potential"]), nonlinearity=_strip_none(cfg["nonlinearity"]),
            lam=float(cfg["lambda"]), eps=float(cfg["eps"]), amplitude=float(s["amplitude"]),
            widths=tuple(float(w) for w in s["widths"]),
            center=None if s["center"] is None else tuple(float(c) for c in s["center"]),
            init_field=s["init_field"], noise=float(s["noise"]),
            seed=int(cfg["seed"] if seed is None else seed), max_iter=int(s["max_iter"]),
            step0=float(s["step0"]), max_step=float(s["max_step"]), max_halvings=int(s["max_halvings"]),
            tol_energy=float(s["tol_energy"]), tol_poh=float(s["tol_poh"]), tol_grad=float(s["tol_grad"]),
            kernel=s["kernel"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def battery_config(cfg: dict, solve: SolveConfig | None = None) -> BatteryConfig:
    v = cfg["verify"]
    return BatteryConfig(seed=int(v["seed"]), elementary_samples=int(v["elementary_samples"]),
                         identity_samples=int(v["identity_samples"]), key_fields=int(v["key_fields"]),
                         key_grid=tuple(v["key_grid"]), hardy_fields=int(v["hardy_fields"]),
                         riesz_fields=int(v["riesz_fields"]), solution=v["solution"],
                         solution_config=solve if v["solution"] else None, checks=tuple(v["checks"]))


def oracle_config(cfg: dict) -> OracleConfig:
    o = cfg["oracle"]
    return OracleConfig(R_max=float(o["R_max"]), dr=float(o["dr"]), mass=float(o["mass"]),
                        mixing=float(o["mixing"]), tol=float(o["tol"]), max_iter=int(o["max_iter"]))
