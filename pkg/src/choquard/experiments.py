"""Sweeps over eps and lambda, concentration metrics, the radial Pekar
oracle and the batch verification battery."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import eigh_tridiagonal

from . import functionals as fn
from .grid import Field, gaussian, gradient_sq_norm_array, make_grid
from .models import make_nonlinearity, make_potential
from .riesz import plan_riesz, riesz_convolve, riesz_convolve_direct
from .solver import (
    SolveConfig, SolveResult, _initial_field, autonomous_config, build_problem, descend,
    mountain_pass_upper_bound, solve_ground_state,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- metrics

@dataclass(frozen=True)
class Concentration:
    centroid: tuple
    argmax: tuple
    rms_width: float

    def to_dict(self) -> dict:
        return {"centroid": list(self.centroid), "argmax": list(self.argmax), "rms_width": self.rms_width}


def concentration_metrics(u: Field) -> Concentration:
    g = u.grid
    w = u.values**2
    mass = float(np.sum(w))
    if mass == 0.0:
        raise ValueError("concentration metrics need a nonzero field")
    coords = g.coords()
    c = [float(np.sum(x * w) / mass) for x in coords]
    spread = sum(float(np.sum((x - ci) ** 2 * w)) for x, ci in zip(coords, c)) / mass
    idx = np.unravel_index(int(np.argmax(np.abs(u.values))), g.shape)
    amax = tuple(float(g.axis[i]) for i in idx)
    return Concentration(tuple(c), amax, math.sqrt(spread))


# ---------------------------------------------------------------- eps scaling

def scaled_field(u: Field, eps: float) -> Field:
    """``v(y) = u(y/eps)``: the same samples on the grid of length ``eps L``."""
    g = u.grid
    return Field(make_grid(g.dim, eps * g.L, g.n), u.values)


def original_energy(v: Field, pspec, nspec, alpha: float, eps: float, lam: float = 1.0, plan=None) -> float:
    """``J_eps(v) = (eps^2 ||grad v||^2 + int V v^2)/2 - lam eps^(-alpha) d(v)/2``.

    Assembled directly on the grid of ``v`` with its own Riesz plan.
    """
    g = v.grid
    plan = plan_riesz(g, alpha) if plan is None else plan
    vals = v.values
    a = gradient_sq_norm_array(vals, g)
    b = g.cell_volume * float(np.sum(pspec.value(g.radius) * vals * vals))
    F = nspec.F(vals)
    conv = riesz_convolve(plan, Field(g, F)).values
    d = g.cell_volume * float(np.sum(conv * F))
    return 0.5 * (eps**2 * a + b) - lam * eps ** (-alpha) * d / 2


def eps_identity_residual(problem: fn.Problem, u: Field, plan_scaled=None) -> float:
    """Relative residual of ``J_eps(v) = eps^N I^eps(u)`` with ``v(y) = u(y/eps)``."""
    eps = problem.eps
    if not eps > 0:
        raise ValueError("identity needs eps > 0")
    lhs = original_energy(scaled_field(u, eps), problem.pspec, problem.nspec, problem.alpha, eps,
                          problem.lam, plan_scaled)
    rhs = eps**problem.N * fn.energy_breakdown(problem, u).I
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepResult:
    parameter: str
    values: list
    summaries: list
    metrics: list
    identity_residuals: list
    verdicts: dict = field(default_factory=dict)

    CSV_COLUMNS = ("param", "m", "converged", "iterations", "pohozaev_residual", "gradient_residual",
                   "centroid_dist", "rms_width", "identity_residual", "bound")

    @property
    def all_converged(self) -> bool:
        return all(s["converged"] for s in self.summaries)

    def rows(self) -> list[list]:
        out = []
        for v, s, mt, r in zip(self.values, self.summaries, self.metrics, self.identity_residuals):
            out.append([v, s["m"], int(s["converged"]), s["iterations"], s["pohozaev_residual"],
                        s["gradient_residual"], mt.get("centroid_dist", math.nan),
                        mt.get("rms_width", math.nan), r, mt.get("bound", math.nan)])
        return out

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "values": list(self.values), "summaries": self.summaries,
                "metrics": self.metrics, "identity_residuals": self.identity_residuals,
                "verdicts": self.verdicts}


def sweep_epsilon(cfg: SolveConfig, eps_list, warm_start: bool = True, identity_tol: float = 1e-10,
                  centroid_slack: float | None = None) -> SweepResult:
    """Solve the rescaled problem for each eps and track concentration.

    Metrics refer to the back-scaled solution ``v(y) = u(y/eps)`` in the
    original variables.  The centroid trend is a soft check, allowing one
    grid spacing of slack at each eps unless ``centroid_slack`` is given.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be sorted in descending order")
    summaries, metrics, resid = [], [], []
    prev = None
    x0 = None
    for eps in eps_list:
        c = replace(cfg, eps=eps)
        problem = build_problem(c)
        if x0 is None:
            x0 = np.zeros(problem.N) if problem.pspec.x0 is None else np.asarray(problem.pspec.x0)
        u0 = prev if (warm_start and prev is not None) else _initial_field(problem, c, c.widths[0],
                                                                          np.random.default_rng(c.seed))
        res = descend(problem, u0, c)
        prev = res.field
        v = scaled_field(res.field, eps)
        conc = concentration_metrics(v)
        r = eps_identity_residual(problem, res.field)
        if r > identity_tol:
            raise RuntimeError(f"rescaling identity violated at eps={eps}: relative residual {r:.3e}")
        summaries.append(res.summary())
        metrics.append({**conc.to_dict(), "centroid_dist": float(np.linalg.norm(np.array(conc.centroid) - x0)),
                        "h": v.grid.h})
        resid.append(r)
        logger.info("eps=%g m=%.10g converged=%s", eps, res.m, res.converged)
    dists = [mt["centroid_dist"] for mt in metrics]
    slack = [mt["h"] if centroid_slack is None else centroid_slack for mt in metrics]
    trend = all(b <= a + s for a, b, s in zip(dists, dists[1:], slack[1:]))
    verdicts = {"centroid_trend": "pass" if trend else "fail",
                "all_converged": "pass" if all(s["converged"] for s in summaries) else "fail"}
    return SweepResult("eps", eps_list, summaries, metrics, resid, verdicts)


def sweep_lambda(cfg: SolveConfig, lambda_list, path_potential: dict | None = None,
                 slack: float = 1e-6) -> SweepResult:
    """``m_lam^inf`` for each lambda plus the dilation-path bound for ``c_lam``.

    The path potential defaults to the configured one; the autonomous problem
    uses its ``V_inf``.  Each autonomous solve starts from the same ansatz.
    """
    lams = [float(x) for x in lambda_list]
    if not lams or any(not 0.5 <= x <= 1 for x in lams):
        raise ValueError("lambda values must lie in [1/2, 1]")
    base = cfg if path_potential is None else replace(cfg, potential=dict(path_potential))
    auto = autonomous_config(base)
    sols = [solve_ground_state(replace(auto, lam=lam)) for lam in lams]
    u1 = next((s for lam, s in zip(lams, sols) if lam == 1.0), None)
    if u1 is None:
        u1 = solve_ground_state(replace(auto, lam=1.0))
    summaries, metrics = [], []
    for lam, res in zip(lams, sols):
        problem = build_problem(replace(base, lam=lam))
        bound = mountain_pass_upper_bound(u1, lam, problem) if u1.converged else None
        summaries.append(res.summary())
        mt = {"m_inf": res.m}
        if bound is not None:
            mt.update(bound=bound.bound, T=bound.T, margin=res.m - bound.bound)
        metrics.append(mt)
    ms = [s["m"] for s in summaries]
    order = np.argsort(lams, kind="stable")
    sorted_m = [ms[i] for i in order]
    mono = all(b <= a + slack for a, b in zip(sorted_m, sorted_m[1:]))
    verdicts = {"monotone_nonincreasing": "pass" if mono else "fail",
                "all_converged": "pass" if all(s["converged"] for s in summaries) else "fail",
                "margins": [mt.get("margin") for mt in metrics]}
    return SweepResult("lambda", lams, summaries, metrics, [math.nan] * len(lams), verdicts)


# ---------------------------------------------------------------- radial oracle

@dataclass(frozen=True)
class OracleConfig:
    R_max: float = 30.0
    dr: float = 0.005
    mass: float = 30.0
    mixing: float = 0.5
    tol: float = 1e-12
    max_iter: int = 2000


@dataclass(frozen=True)
class OracleResult:
    m: float
    a: float
    l2sq: float
    d: float
    mu: float
    pohozaev_residual: float
    iterations: int
    r: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"m": float(self.m), "a": float(self.a), "l2sq": float(self.l2sq), "d": float(self.d),
                "mu": float(self.mu), "pohozaev_residual": float(self.pohozaev_residual),
                "iterations": self.iterations}


def _newton_potential(r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``(1/r) int_0^r s^2 rho + int_r^R s rho`` with trapezoid sums from the origin."""
    rr = np.concatenate([[0.0], r])
    inner_ = cumulative_trapezoid(np.concatenate([[0.0], r * r * rho]), rr, initial=0.0)[1:]
    outer_all = cumulative_trapezoid(np.concatenate([[0.0], r * rho]), rr, initial=0.0)
    outer = outer_all[-1] - outer_all[1:]
    return inner_ / r + outer


def _oracle_scf(cfg: OracleConfig, mass: float):
    K = int(round(cfg.R_max / cfg.dr)) - 1
    r = cfg.dr * np.arange(1, K + 1)
    h = cfg.dr
    w = 4 * math.pi * h
    chi = r * np.exp(-r)
    chi *= math.sqrt(mass / (w * np.sum(chi**2)))
    rho = chi**2 / (2 * r * r)
    mu_old = math.inf
    off = np.full(K - 1, -1.0 / h**2)
    for it in range(1, cfg.max_iter + 1):
        phi = _newton_potential(r, rho)
        vals, vecs = eigh_tridiagonal(2.0 / h**2 - phi, off, select="i", select_range=(0, 0))
        chi = vecs[:, 0] * math.sqrt(mass / w)
        chi = chi if chi[np.argmax(np.abs(chi))] > 0 else -chi
        new_rho = chi**2 / (2 * r * r)
        mu = -vals[0]
        change = w * np.sum(np.abs(new_rho - rho) * r * r)
        rho = (1 - cfg.mixing) * rho + cfg.mixing * new_rho
        if abs(mu - mu_old) < cfg.tol * abs(mu) and change < 1e-10:
            break
        mu_old = mu
    else:
        raise RuntimeError(f"radial oracle did not converge in {cfg.max_iter} iterations")
    # Energies from the final eigenvector with its own density.
    rho = chi**2 / (2 * r * r)
    phi = _newton_potential(r, rho)
    ext = np.concatenate([[0.0], chi, [0.0]])
    a = w * np.sum(np.diff(ext) ** 2) / h**2
    l2 = w * np.sum(chi**2)
    d = w * np.sum(phi * chi**2 / 2)
    return r, chi, mu, a, l2, d, it


def radial_oracle_pekar(cfg: OracleConfig = OracleConfig()) -> OracleResult:
    """Ground state energy of ``-Lap u + u = (I_2 * u^2/2) u`` in three dimensions.

    A fixed-mass Hartree problem ``-chi'' - Phi chi = -mu chi`` (``chi = r w``)
    is iterated to self-consistency; ``u(x) = w(x/sqrt(mu))/mu`` then solves
    the equation.  The mass is first rescaled so that ``mu = 1`` on the
    second pass, keeping the profile on ``r <= R_max``.
    """
    if cfg.R_max < 30:
        raise ValueError("radial oracle needs R_max >= 30")
    *_, mu0, _, _, _, _ = _oracle_scf(cfg, cfg.mass)
    r, chi, mu, a_w, l_w, d_w, it = _oracle_scf(cfg, cfg.mass / math.sqrt(mu0))
    # Exact rescaling to mu = 1.
    a = mu**-1.5 * a_w
    l2 = mu**-0.5 * l_w
    d = mu**-1.5 * d_w
    m = a / 2 + l2 / 2 - d / 2
    P = a / 2 + 3 * l2 / 2 - 5 * d / 2
    u = chi / r / mu
    return OracleResult(float(m), float(a), float(l2), float(d), float(mu), float(abs(P) / (a + 3 * l2 + d)), it,
                        r * math.sqrt(mu), u)


# ---------------------------------------------------------------- battery

@dataclass(frozen=True)
class BatteryConfig:
    seed: int = 0
    elementary_samples: int = 10_000
    identity_samples: int = 1000
    key_fields: int = 100
    key_grid: tuple = (3, 12.0, 24)
    hardy_fields: int = 20
    riesz_fields: int = 5
    solution: str | None = None
    solution_config: SolveConfig | None = None
    checks: tuple = ("elementary", "identity", "key_inequality", "hardy", "riesz_direct", "hls_ratio",
                     "pohozaev")


@dataclass
class CheckOutcome:
    check: str
    status: str
    margin: float
    witness: object = None

    def to_dict(self) -> dict:
        return {"check": self.check, "status": self.status, "margin": self.margin, "witness": self.witness}


def _random_gaussian(grid, rng, amp=(0.5, 3.0), width=(0.8, 2.0), shift=1.0) -> Field:
    c = rng.uniform(-shift, shift, grid.dim)
    return gaussian(grid, rng.uniform(*amp), rng.uniform(*width), c)


def check_elementary(n: int, rng) -> CheckOutcome:
    N = rng.choice([3, 4, 5], n)
    alpha = rng.uniform(0, 1, n) * N
    alpha = np.clip(alpha, 1e-6, N - 1e-6)
    t = np.concatenate([rng.uniform(0, 1, n // 2), rng.uniform(1, 10, n - n // 2)])
    worst = math.inf
    wit = None
    for Ni in (3, 4, 5):
        sel = N == Ni
        for name, fun in (("g", fn.g_elem), ("h", fn.h_elem)):
            vals = fun(t[sel], Ni, alpha[sel])
            j = int(np.argmin(vals))
            if vals[j] < worst:
                worst, wit = float(vals[j]), {"fn": name, "t": float(t[sel][j]), "N": Ni,
                                               "alpha": float(alpha[sel][j])}
    return CheckOutcome("elementary_positivity", "pass" if worst >= -1e-14 else "fail", worst, wit)


def check_identity(n: int, rng) -> CheckOutcome:
    a, l2, d = rng.uniform(0.1, 10, (3, n))
    t = rng.uniform(0.1, 10, n)
    Vinf = rng.uniform(0.1, 5)
    lam = rng.uniform(0.5, 1)
    res = fn.autonomous_identity_residual(a, l2, d, Vinf, lam, t, 3, 2.0)
    scale = fn.identity_scale(a, l2, d, Vinf, lam, t, 3, 2.0)
    rel = np.abs(res) / scale
    j = int(np.argmax(rel))
    return CheckOutcome("scaling_identity", "pass" if rel[j] <= 1e-12 else "fail", float(1e-12 - rel[j]),
                        {"t": float(t[j]), "relative_residual": float(rel[j])})


def check_key_inequality(n_fields: int, rng, grid_params, t_values=None) -> CheckOutcome:
    N, L, n = grid_params
    g = make_grid(N, L, n)
    alpha = 2.0
    problem = fn.Problem(g, plan_riesz(g, alpha), make_potential("remark14_i", N, alpha, a=3, b=1),
                         make_nonlinearity("pekar"))
    ts = np.geomspace(0.2, 5, 20) if t_values is None else np.asarray(t_values)
    worst, wit = math.inf, None
    for k in range(n_fields):
        u = _random_gaussian(g, rng)
        fb = fn.FiberMap(problem, u)
        scale = fb.scale
        for t in ts:
            gap = fn.key_inequality_gap(problem, u, float(t), fiber=fb) / scale
            if gap < worst:
                worst, wit = gap, {"field": k, "t": float(t)}
    return CheckOutcome("key_inequality", "pass" if worst >= -1e-8 else "fail", float(worst), wit)


def check_hardy(n_fields: int, rng) -> CheckOutcome:
    g = make_grid(3, 16.0, 32)
    worst, wit = math.inf, None
    for k in range(n_fields):
        gap, a = fn.hardy_gap(_random_gaussian(g, rng, shift=0.5))
        if gap / a < worst:
            worst, wit = gap / a, {"field": k}
    return CheckOutcome("hardy", "pass" if worst >= 0 else "fail", float(worst), wit)


def check_riesz_direct(n_fields: int, rng) -> CheckOutcome:
    g = make_grid(3, 4.0, 8)
    alpha = 2.0
    plan = plan_riesz(g, alpha)
    worst = 0.0
    for _ in range(n_fields):
        f = Field(g, rng.standard_normal(g.shape))
        a = riesz_convolve(plan, f).values
        b = riesz_convolve_direct(g, alpha, f).values
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return CheckOutcome("riesz_fft_vs_direct", "pass" if worst <= 1e-12 else "fail", 1e-12 - worst,
                        {"max_relative_error": worst})


def check_hls_ratio(rng) -> CheckOutcome:
    g = make_grid(3, 16.0, 32)
    problem = fn.Problem(g, plan_riesz(g, 2.0), make_potential("constant", 3, 2.0, Vinf=1.0),
                         make_nonlinearity("pekar"))
    ratios = [fn.hls_ratio(problem, _random_gaussian(g, rng)) for _ in range(10)]
    return CheckOutcome("hls_ratio", "info", float(max(ratios)), {"ratios": ratios})


def check_pohozaev(path: str | None, cfg: SolveConfig | None, tol: float = 1e-4) -> CheckOutcome:
    from .grid import load_field

    if path is None or cfg is None:
        return CheckOutcome("pohozaev_loaded", "skipped", math.nan, "no solution supplied")
    u = load_field(path)
    problem = build_problem(cfg)
    br = fn.energy_breakdown(problem, u)
    r = br.pohozaev_residual
    return CheckOutcome("pohozaev_loaded", "pass" if r <= tol else "fail", tol - r, {"residual": r})


def verify_battery(cfg: BatteryConfig = BatteryConfig()) -> dict:
    """Run the configured checks; ``passed`` is False on any hard failure."""
    rng = np.random.default_rng(cfg.seed)
    runners = {
        "elementary": lambda: check_elementary(cfg.elementary_samples, rng),
        "identity": lambda: check_identity(cfg.identity_samples, rng),
        "key_inequality": lambda: check_key_inequality(cfg.key_fields, rng, cfg.key_grid),
        "hardy": lambda: check_hardy(cfg.hardy_fields, rng),
        "riesz_direct": lambda: check_riesz_direct(cfg.riesz_fields, rng),
        "hls_ratio": lambda: check_hls_ratio(rng),
        "pohozaev": lambda: check_pohozaev(cfg.solution, cfg.solution_config),
    }
    unknown = set(cfg.checks) - set(runners)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    outcomes = []
    for name in cfg.checks:
        t0 = time.perf_counter()
        out = runners[name]()
        logger.info("%s: %s (%.2fs)", out.check, out.status, time.perf_counter() - t0)
        outcomes.append(out)
    passed = all(o.status != "fail" for o in outcomes)
    return {"passed": passed, "checks": [o.to_dict() for o in outcomes]}
