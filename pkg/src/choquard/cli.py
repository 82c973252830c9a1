"""Command line entry point.

    choquard <verb> --config run.json --out outdir [--seed S] [--threads K]

Verbs: solve, solve-autonomous, verify, sweep-eps, sweep-lambda, oracle, report.
Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 verification failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, battery_config, oracle_config, parse_config, solve_config
from .experiments import radial_oracle_pekar, sweep_epsilon, sweep_lambda, verify_battery
from .grid import dump_field, set_fft_workers
from .models import check_assumptions, diagnostic_constants, make_nonlinearity
from .solver import (
    FiberError, SolveResult, autonomous_config, build_potential, build_problem, solve_ground_state,
)

logger = logging.getLogger("choquard")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4, 5
VERBS = ("solve", "solve-autonomous", "verify", "sweep-eps", "sweep-lambda", "oracle", "report")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects outputs and timings for one invocation."""

    def __init__(self, out: Path, cfg: dict, verb: str, seed: int):
        self.out = out
        self.cfg = cfg
        self.verb = verb
        self.seed = seed
        self.timings: dict[str, float] = {}
        self.files: list[Path] = []
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def stage(self, name: str, fn, *args, **kw):
        t = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timings[name] = time.perf_counter() - t

    def json(self, name: str, obj) -> None:
        p = self.out / name
        _write_json(p, obj)
        self.files.append(p)

    def csv(self, name: str, header, rows) -> None:
        p = self.out / name
        _write_csv(p, header, rows)
        self.files.append(p)

    def field(self, name: str, u) -> None:
        self.files.extend(dump_field(u, self.out / name))

    def manifest(self, status: int) -> None:
        man = {
            "tool": "choquard",
            "version": __version__,
            "verb": self.verb,
            "config": self.cfg,
            "seed": self.seed,
            "exit_status": status,
            "wall_time": time.perf_counter() - self.t0,
            "timings": self.timings,
            "outputs": {p.name: _sha256(p) for p in self.files},
            **self.extra,
        }
        _write_json(self.out / "manifest.json", man)


def _write_solution(run: Run, res: SolveResult, prefix: str = "") -> None:
    run.field(f"{prefix}solution.field", res.field)
    run.json(f"{prefix}summary.json", res.summary())
    run.csv(f"{prefix}trace.csv", SolveResult.TRACE_COLUMNS, res.trace)


def _cmd_solve(run: Run, autonomous: bool) -> int:
    sc = solve_config(run.cfg, run.seed)
    if autonomous:
        sc = autonomous_config(sc)
    problem = run.stage("plan", build_problem, sc)
    run.extra["plan_fingerprint"] = problem.plan.fingerprint()
    run.extra["kernel"] = problem.plan.method
    res = run.stage("solve", solve_ground_state, sc, problem)
    _write_solution(run, res)
    logger.info("m = %.12g, converged = %s (%s)", res.m, res.converged, res.message)
    return EXIT_OK if res.converged else EXIT_NONCONV


def _sweep_out(run: Run, sw) -> int:
    from .experiments import SweepResult

    run.csv("sweep.csv", SweepResult.CSV_COLUMNS, sw.rows())
    run.json("sweep.json", sw.to_dict())
    return EXIT_OK if sw.all_converged else EXIT_NONCONV


def _cmd_sweep_eps(run: Run) -> int:
    sc = solve_config(run.cfg, run.seed)
    sw = run.stage("sweep", sweep_epsilon, sc, run.cfg["sweep"]["eps"], run.cfg["sweep"]["warm_start"])
    return _sweep_out(run, sw)


def _cmd_sweep_lambda(run: Run) -> int:
    sc = solve_config(run.cfg, run.seed)
    sw = run.stage("sweep", sweep_lambda, sc, run.cfg["sweep"]["lambda"], run.cfg["sweep"]["path_potential"])
    return _sweep_out(run, sw)


def _cmd_verify(run: Run) -> int:
    sc = solve_config(run.cfg, run.seed) if run.cfg["verify"]["solution"] else None
    rep = run.stage("battery", verify_battery, battery_config(run.cfg, sc))
    run.json("report.json", rep)
    for c in rep["checks"]:
        logger.info("%-24s %-7s margin=%s", c["check"], c["status"], c["margin"])
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


def _cmd_oracle(run: Run) -> int:
    c = run.cfg
    nl = c["nonlinearity"]
    p = 2.0 if nl["variant"] == "pekar" else nl["p"]
    pot = c["potential"]
    if not (c["grid"]["N"] == 3 and c["alpha"] == 2 and p == 2 and nl["variant"] != "two_power"
            and pot["variant"] == "constant" and pot["Vinf"] == 1):
        raise ConfigError("oracle covers only N=3, alpha=2, F(t)=t^2/2 with V = 1")
    res = run.stage("oracle", radial_oracle_pekar, oracle_config(c))
    run.json("oracle.json", res.to_dict())
    run.csv("oracle_profile.csv", ("r", "u"), zip(res.r, res.u))
    return EXIT_OK


def _cmd_report(run: Run) -> int:
    sc = solve_config(run.cfg, run.seed)
    pspec = build_potential(sc)
    nl = dict(sc.nonlinearity)
    nspec = make_nonlinearity(nl.pop("variant"), **nl)
    N, alpha = sc.N, sc.alpha
    rep = {"potential": pspec.describe(), "nonlinearity": nspec.describe()}
    rep["assumptions"] = check_assumptions(pspec, nspec, N, alpha).to_dict()
    try:
        rep["diagnostic_constants"] = diagnostic_constants(pspec, N, alpha)
    except ValueError as exc:
        rep["diagnostic_constants"] = {"error": str(exc)}
    prior = {}
    for name in ("summary.json", "sweep.json", "oracle.json"):
        p = run.out / name
        if p.exists():
            prior[name] = json.loads(p.read_text(encoding="utf-8"))
    rep["existing_outputs"] = prior
    run.json("assumptions.json", rep)
    return EXIT_OK


def run_command(verb: str, cfg: dict, out_dir, seed: int | None = None) -> int:
    """Dispatch ``verb`` on a resolved config; returns the exit status."""
    if verb not in VERBS:
        raise ConfigError(f"unknown verb {verb!r}")
    out = Path(out_dir)
    seed = cfg["seed"] if seed is None else int(seed)
    cfg = {**cfg, "seed": seed}
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory: %s", exc)
        return EXIT_IO
    run = Run(out, cfg, verb, seed)
    handlers = {
        "solve": lambda: _cmd_solve(run, False),
        "solve-autonomous": lambda: _cmd_solve(run, True),
        "verify": lambda: _cmd_verify(run),
        "sweep-eps": lambda: _cmd_sweep_eps(run),
        "sweep-lambda": lambda: _cmd_sweep_lambda(run),
        "oracle": lambda: _cmd_oracle(run),
        "report": lambda: _cmd_report(run),
    }
    try:
        status = handlers[verb]()
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        status = EXIT_CONFIG
    except FiberError as exc:
        logger.error("%s", exc)
        status = EXIT_NONCONV
    except RuntimeError as exc:
        logger.error("%s", exc)
        status = EXIT_VERIFY
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        status = EXIT_IO
    try:
        run.manifest(status)
    except OSError as exc:
        logger.error("I/O error writing manifest: %s", exc)
        return EXIT_IO
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="choquard", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    logging.basicConfig(level=os.environ.get("LOG", "INFO").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    threads = args.threads if args.threads is not None else os.environ.get("THREADS")
    if threads is not None:
        set_fft_workers(int(threads))
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2**64:
        logger.error("configuration error: seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    return run_command(args.verb, cfg, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
