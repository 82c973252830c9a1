"""Ground states by descent on the Pohozaev manifold.

Every iterate is projected onto ``{P = 0}`` by dilating it to the maximizer
of its fibering map, so the energy at each iterate equals
``max_t I(u_t)``; minimizing that value over ``Lambda = {d > 0}`` gives the
least energy level ``m``.  Steps use the tangential part of the
``(c - Lap)^(-1)``-preconditioned gradient with Polak-Ribiere conjugation and
a halving line search that accepts a step only if the re-projected energy
drops.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .functionals import (
    EnergyBreakdown, FiberMap, Problem, energy_and_gradients, lambda_membership,
    membership_threshold,
)
from .grid import Field, GridSpec, _irfftn, _rfftn, dilate_array, gaussian, inner, load_field, make_grid
from .models import PotentialSpec, make_nonlinearity, make_potential
from .riesz import RieszPlan, plan_riesz

logger = logging.getLogger(__name__)

FIBER_RANGE = (1e-3, 1e3)
FIBER_SAMPLES = 64
FIBER_XTOL = 1e-10
AMPLITUDE_SCAN = (1.0, 2.0, 4.0, 8.0)


class FiberError(ValueError):
    """The fibering map has no interior maximizer for this field."""


@dataclass(frozen=True)
class SolveConfig:
    N: int = 3
    L: float = 24.0
    n: int = 64
    alpha: float = 2.0
    potential: dict = field(default_factory=lambda: {"variant": "constant", "Vinf": 1.0})
    nonlinearity: dict = field(default_factory=lambda: {"variant": "pekar"})
    lam: float = 1.0
    eps: float = 0.0
    amplitude: float = 1.0
    widths: tuple = (1.5,)
    center: tuple | None = None
    init_field: str | None = None
    noise: float = 0.0
    seed: int = 0
    max_iter: int = 400
    step0: float = 1.0
    max_step: float = 16.0
    max_halvings: int = 40
    tol_energy: float = 1e-10
    tol_poh: float = 1e-7
    tol_grad: float = 1e-5
    kernel: str = "auto"

    def __post_init__(self):
        for name in ("tol_energy", "tol_poh", "tol_grad"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.5 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [1/2, 1], got {self.lam}")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        h = self.L / self.n
        for w in self.widths:
            if not w > 2 * h:
                raise ValueError(f"initial width {w} must exceed two grid spacings ({2 * h})")
        if self.max_iter < 0 or self.max_halvings < 1:
            raise ValueError("max_iter must be >= 0 and max_halvings >= 1")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")


@dataclass
class SolveResult:
    field: Field
    m: float
    breakdown: EnergyBreakdown
    pohozaev_residual: float
    gradient_residual: float
    iterations: int
    t_history: np.ndarray
    in_lambda: bool
    converged: bool
    trace: list = field(default_factory=list, repr=False)
    seed: int = 0
    start_index: int = 0
    message: str = ""
    full_gradient_residual: float = math.nan

    TRACE_COLUMNS = ("iter", "I", "P_residual", "grad_residual", "t_star", "step")

    def summary(self) -> dict:
        return {
            "m": self.m,
            "breakdown": self.breakdown.to_dict(),
            "pohozaev_residual": self.pohozaev_residual,
            "gradient_residual": self.gradient_residual,
            "iterations": self.iterations,
            "in_lambda": self.in_lambda,
            "converged": self.converged,
            "seed": self.seed,
            "start_index": self.start_index,
            "message": self.message,
            "full_gradient_residual": self.full_gradient_residual,
        }


@lru_cache(maxsize=4)
def _cached_plan(grid: GridSpec, alpha: float, method: str) -> RieszPlan:
    return plan_riesz(grid, alpha, method=method)


def build_potential(cfg: SolveConfig) -> PotentialSpec:
    p = dict(cfg.potential)
    variant = p.pop("variant")
    return make_potential(variant, cfg.N, cfg.alpha, **p)


def build_problem(cfg: SolveConfig, pspec: PotentialSpec | None = None) -> Problem:
    grid = make_grid(cfg.N, cfg.L, cfg.n)
    plan = _cached_plan(grid, float(cfg.alpha), cfg.kernel)
    nl = dict(cfg.nonlinearity)
    nspec = make_nonlinearity(nl.pop("variant"), **nl)
    return Problem(grid, plan, build_potential(cfg) if pspec is None else pspec, nspec, cfg.lam, cfg.eps)


# ---------------------------------------------------------------- fibering

def fiber_maximize(fiber: FiberMap, t_range=FIBER_RANGE, samples: int = FIBER_SAMPLES,
                   xtol: float = FIBER_XTOL) -> tuple[float, float]:
    """Unique maximizer ``t*`` of ``zeta`` and ``zeta(t*)``."""
    thresh = 1e-12 * max(abs(fiber.a) + abs(fiber.potential_term(1.0)), 1e-300)
    if not lambda_membership(fiber.lam * fiber.d, thresh):
        raise FiberError("fibering undefined: d <= 0 (field outside Lambda)")
    ts = np.logspace(math.log10(t_range[0]), math.log10(t_range[1]), samples)
    z = np.array([fiber.zeta(t) for t in ts])
    dz = np.array([fiber.dzeta(t) for t in ts])
    changes = int(np.count_nonzero(np.diff(np.sign(dz)) != 0))
    if changes != 1:
        warnings.warn(f"fibering derivative changes sign {changes} times on the sample grid",
                      RuntimeWarning, stacklevel=2)
    i = int(np.argmax(z))
    if i == 0 or i == samples - 1:
        raise FiberError(f"no interior fibering maximum in [{t_range[0]}, {t_range[1]}]")
    s = np.log(ts)

    def neg(x):
        return -fiber.zeta(math.exp(x))

    res = minimize_scalar(neg, bracket=(s[i - 1], s[i], s[i + 1]), method="golden",
                          options={"xtol": xtol})
    t = math.exp(res.x)
    # Polish on zeta' where the golden bracket straddles its root.
    lo, hi = t * (1 - 1e-6), t * (1 + 1e-6)
    dlo, dhi = fiber.dzeta(lo), fiber.dzeta(hi)
    if dlo > 0 > dhi:
        t = brentq(fiber.dzeta, lo, hi, xtol=1e-15 * t, rtol=4 * np.finfo(float).eps)
    return t, fiber.zeta(t)


def project_to_manifold(problem: Problem, u: Field) -> tuple[Field, float, float]:
    """``(u_{t*}, t*, zeta(t*))`` with ``t*`` the fibering maximizer."""
    fb = FiberMap(problem, u)
    t, z = fiber_maximize(fb)
    return Field(u.grid, dilate_array(u.values, u.grid, t)), t, z


# ---------------------------------------------------------------- descent

def _preconditioner(problem: Problem):
    c = max(problem.pspec.V_inf, 1e-3)
    denom = c + problem.grid.k2
    shape = problem.grid.shape

    def apply(r: np.ndarray) -> np.ndarray:
        return _irfftn(_rfftn(r) / denom, shape)

    return apply


def _initial_field(problem: Problem, cfg: SolveConfig, width: float, rng) -> Field:
    g = problem.grid
    if cfg.init_field is not None:
        u = load_field(cfg.init_field)
        if u.grid != g:
            raise ValueError("initial field grid does not match the configured grid")
        return u
    center = cfg.center if cfg.center is not None else (0.0,) * g.dim
    for scale in AMPLITUDE_SCAN:
        u = gaussian(g, cfg.amplitude * scale, width, center)
        if cfg.noise > 0:
            env = u.values / (cfg.amplitude * scale)
            u = Field(g, u.values + cfg.noise * cfg.amplitude * scale * env * rng.standard_normal(g.shape))
        br, _, _ = energy_and_gradients(problem, u.values)
        if lambda_membership(problem.lam * br.d, membership_threshold(br)):
            return u
    raise FiberError("initial ansatz never entered Lambda over the amplitude scan")


def _residuals(problem: Problem, gI: np.ndarray, gP: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    """Tangential and full L2 gradient norms relative to ``||u||_2``.

    The tangential part removes the component along ``grad P``, the normal
    of the constraint surface.
    """
    g = problem.grid
    norm = math.sqrt(inner(vals, vals, g))
    if norm == 0:
        return math.inf, math.inf
    nn = inner(gP, gP, g)
    tang = gI - (inner(gI, gP, g) / nn) * gP if nn > 0 else gI
    return math.sqrt(inner(tang, tang, g)) / norm, math.sqrt(inner(gI, gI, g)) / norm


def descend(problem: Problem, u0: Field, cfg: SolveConfig) -> SolveResult:
    """Projected descent from ``u0``; the core of every solve."""
    g = problem.grid
    precond = _preconditioner(problem)
    fb = FiberMap(problem, u0)
    t, _ = fiber_maximize(fb)
    vals = dilate_array(u0.values, g, t)
    br, gI, gP = energy_and_gradients(problem, vals)
    t_hist = [t]
    res0 = _residuals(problem, gI, gP, vals)
    trace = [(0, br.I, br.pohozaev_residual, res0[0], t, 0.0)]
    full_res = res0[1]
    step = cfg.step0
    d_prev = None
    pg_prev = None
    gI_prev = None
    rel_drop = math.inf
    converged = False
    message = "iteration cap reached"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        gres = trace[-1][3]
        if rel_drop <= cfg.tol_energy and br.pohozaev_residual <= cfg.tol_poh and gres <= cfg.tol_grad:
            converged = True
            message = "converged"
            it -= 1
            break
        pg = precond(gI)
        pn = precond(gP)
        # Tangential part with respect to the preconditioned metric.
        nn = inner(pn, gP, g)
        coef = inner(pg, gP, g) / nn if nn > 0 else 0.0
        direction = pg - coef * pn
        if d_prev is not None:
            beta = inner(gI, pg - pg_prev, g) / max(inner(gI_prev, pg_prev, g), 1e-300)
            beta = max(beta, 0.0)
            cand = direction + beta * d_prev
            cand = cand - (inner(cand, gP, g) / nn if nn > 0 else 0.0) * pn
            if inner(gI, cand, g) > 0:
                direction = cand
        slope = inner(gI, direction, g)
        if not slope > 0:
            direction = pg
            slope = inner(gI, pg, g)
        def attempt(s):
            trial = vals - s * direction
            try:
                tt, _ = fiber_maximize(FiberMap(problem, trial))
            except FiberError:
                return None
            nv = dilate_array(trial, g, tt)
            return (nv, *energy_and_gradients(problem, nv), tt, s)

        s = min(2 * step, cfg.max_step)
        accepted = None
        for _ in range(cfg.max_halvings):
            cand = attempt(s)
            if cand is not None and cand[1].I < br.I:
                accepted = cand
                break
            s *= 0.5
        if accepted is not None:
            # One quadratic-interpolation trial from I(0), I'(0) and I(s).
            curv = accepted[1].I - br.I + slope * s
            if curv > 0:
                sq = min(max(slope * s * s / (2 * curv), 0.25 * s), 4 * s, cfg.max_step)
                if abs(sq - s) > 0.1 * s:
                    cand = attempt(sq)
                    if cand is not None and cand[1].I < accepted[1].I:
                        accepted = cand
        if accepted is None:
            message = f"line search stalled after {cfg.max_halvings} halvings"
            it -= 1
            gres = trace[-1][3]
            converged = (br.pohozaev_residual <= cfg.tol_poh and gres <= cfg.tol_grad)
            if converged:
                message = "converged (energy at round-off floor)"
            break
        new_vals, nbr, ngI, ngP, tt, s = accepted
        rel_drop = (br.I - nbr.I) / max(abs(nbr.I), 1e-300)
        d_prev, pg_prev, gI_prev = direction, pg, gI
        vals, br, gI, gP, step = new_vals, nbr, ngI, ngP, s
        t_hist.append(tt)
        tres, full_res = _residuals(problem, gI, gP, vals)
        trace.append((it, br.I, br.pohozaev_residual, tres, tt, s))
    else:
        gres = trace[-1][3]
        if rel_drop <= cfg.tol_energy and br.pohozaev_residual <= cfg.tol_poh and gres <= cfg.tol_grad:
            converged, message = True, "converged"
    u = Field(g, vals)
    in_lam = lambda_membership(br.d, membership_threshold(br))
    return SolveResult(u, br.I, br, br.pohozaev_residual, trace[-1][3], max(it, 0), np.array(t_hist),
                       in_lam, converged, trace, cfg.seed, 0, message, full_res)


def _solve(problem: Problem, cfg: SolveConfig) -> SolveResult:
    rng = np.random.default_rng(cfg.seed)
    best = None
    for k, w in enumerate(cfg.widths):
        u0 = _initial_field(problem, cfg, w, rng)
        res = descend(problem, u0, cfg)
        res.start_index = k
        logger.info("start %d (width %g): m=%.12g converged=%s iters=%d", k, w, res.m, res.converged,
                    res.iterations)
        if best is None or res.m < best.m:
            best = res
    return best


def solve_ground_state(cfg: SolveConfig, problem: Problem | None = None) -> SolveResult:
    """Least energy solution of the configured problem (best over the width list)."""
    return _solve(build_problem(cfg) if problem is None else problem, cfg)


def autonomous_config(cfg: SolveConfig, Vinf: float | None = None) -> SolveConfig:
    if Vinf is None:
        Vinf = build_potential(cfg).V_inf
    return replace(cfg, potential={"variant": "constant", "Vinf": float(Vinf)}, eps=0.0)


def solve_autonomous(cfg: SolveConfig, Vinf: float | None = None) -> SolveResult:
    """Solve the limit problem with ``V`` replaced by the constant ``V_inf``."""
    return solve_ground_state(autonomous_config(cfg, Vinf))


@dataclass(frozen=True)
class PathBound:
    bound: float
    T: float
    t_max: float


def mountain_pass_upper_bound(u1inf: SolveResult, lam: float, problem: Problem,
                              T: float | str = "auto", samples: int = 256) -> PathBound:
    """``max_{t in [0,1]} I_lam(u_{tT})`` along the dilation path of ``u1inf``.

    ``problem`` supplies the (generally nonconstant) potential.  With
    ``T="auto"`` the path end is the first power of two where the comparison
    energy with constant ``V_max`` at ``lambda = 1/2`` is negative from there on.
    """
    if not u1inf.converged:
        raise ValueError("path bound needs a converged autonomous solution")
    if not 0.5 <= lam <= 1:
        raise ValueError("lambda must lie in [1/2, 1]")
    u = u1inf.field
    fb = FiberMap(problem, u, lam=lam)
    if T == "auto":
        star = make_potential("constant", problem.N, problem.alpha, Vinf=problem.pspec.V_max)
        fstar = FiberMap(problem, u, lam=0.5, pspec=star)
        T = None
        cand = 1.0
        while cand <= 1e3:
            tail = np.geomspace(cand, 1e3, 64)
            if all(fstar.zeta(s) < 0 for s in tail):
                T = cand
                break
            cand *= 2
        if T is None:
            raise ValueError("comparison energy never turned negative for t <= 1e3")
    T = float(T)
    ts = np.arange(1, samples + 1) / samples
    z = np.array([fb.zeta(t * T) for t in ts])
    i = int(np.argmax(z))
    best_t, best = ts[i], z[i]
    if 0 < i < samples - 1:
        res = minimize_scalar(lambda t: -fb.zeta(t * T), bracket=(ts[i - 1], ts[i], ts[i + 1]),
                              method="golden", options={"xtol": 1e-12})
        if -res.fun > best:
            best_t, best = res.x, -res.fun
    return PathBound(float(best), T, float(best_t))
