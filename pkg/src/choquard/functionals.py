"""Energy and Pohozaev functionals, their gradients and the scaling identities.

For ``u`` on the grid the base scalars are

* ``a = ||grad u||_2^2``
* ``b_pot = int V_eps u^2`` with ``V_eps(x) = V(eps x)`` (``eps = 0`` means ``V``)
* ``b_poh = int [N V_eps + grad V_eps . x] u^2``
* ``d = int (I_alpha * F(u)) F(u)``

and everything else is algebra in these four numbers:

    I(u) = (a + b_pot)/2 - lam d/2
    P(u) = (N-2) a/2 + b_poh/2 - (N+alpha) lam d/2

The fibering map ``zeta(t) = I(u_t)`` with ``u_t(x) = u(x/t)`` is evaluated
by exact scaling (powers of ``t`` times fixed integrals, the potential term
with ``V`` at scaled radii), never by resampling ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .grid import Field, GridSpec, gradient_sq_norm_array, inner, laplacian_array
from .models import NonlinSpec, PotentialSpec
from .riesz import RieszPlan, convolve_array

LAMBDA_REL_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything that defines ``I_lambda^eps`` on one grid."""

    grid: GridSpec
    plan: RieszPlan
    pspec: PotentialSpec
    nspec: NonlinSpec
    lam: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if self.plan.grid != self.grid:
            raise ValueError("Riesz plan was built for a different grid")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not (0 <= self.lam <= 1):
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")

    @property
    def N(self) -> int:
        return self.grid.dim

    @property
    def alpha(self) -> float:
        return self.plan.alpha

    @property
    def pot_scale(self) -> float:
        return self.eps if self.eps > 0 else 1.0

    def with_lambda(self, lam: float) -> Problem:
        return replace(self, lam=lam)

    @cached_property
    def V(self) -> np.ndarray:
        if self.pspec.is_constant:
            return np.full(self.grid.shape, self.pspec.V_inf)
        return self.pspec.value(self.pot_scale * self.grid.radius)

    @cached_property
    def poh_weight(self) -> np.ndarray:
        """``N V_eps(x) + grad V_eps(x) . x`` on the nodes."""
        if self.pspec.is_constant:
            return np.full(self.grid.shape, self.N * self.pspec.V_inf)
        return self.N * self.V + self.pspec.radial_derivative(self.pot_scale * self.grid.radius)


@dataclass(frozen=True)
class EnergyBreakdown:
    a: float
    b_pot: float
    b_poh: float
    d: float
    lam: float
    eps: float
    l2sq: float
    N: int
    alpha: float

    @property
    def I(self) -> float:  # noqa: E743
        return (self.a + self.b_pot) / 2 - self.lam * self.d / 2

    @property
    def P(self) -> float:
        return (self.N - 2) * self.a / 2 + self.b_poh / 2 - (self.N + self.alpha) * self.lam * self.d / 2

    @property
    def A(self) -> float:
        return (self.a + self.b_pot) / 2

    @property
    def B(self) -> float:
        return self.d / 2

    @property
    def scale(self) -> float:
        return abs(self.a) + abs(self.b_poh) + abs(self.d)

    @property
    def pohozaev_residual(self) -> float:
        """``|P| / (a + |b_poh| + d)``."""
        s = self.scale
        return abs(self.P) / s if s > 0 else 0.0

    def to_dict(self) -> dict:
        return {"a": self.a, "b_pot": self.b_pot, "b_poh": self.b_poh, "d": self.d, "lambda": self.lam,
                "eps": self.eps, "l2sq": self.l2sq, "I": self.I, "P": self.P}

    CSV_COLUMNS = ("a", "b_pot", "b_poh", "d", "lambda", "eps", "I", "P")

    def csv_row(self) -> list[float]:
        d = self.to_dict()
        return [d[k] for k in self.CSV_COLUMNS]


def _nonlinear_parts(problem: Problem, vals: np.ndarray):
    f, F = problem.nspec.f_and_F(vals)
    conv = convolve_array(problem.plan, F)
    return f, F, conv


def _check_finite(**terms):
    for name, v in terms.items():
        if not math.isfinite(v):
            raise FloatingPointError(f"non-finite {name} term ({v})")


def energy_breakdown(problem: Problem, u: Field) -> EnergyBreakdown:
    if u.grid != problem.grid:
        raise ValueError("field grid does not match the problem grid")
    g = problem.grid
    vals = u.values
    u2 = vals * vals
    a = gradient_sq_norm_array(vals, g)
    if problem.pspec.is_constant:
        l2sq = g.cell_volume * float(np.sum(u2))
        b_pot = problem.pspec.V_inf * l2sq
        b_poh = problem.N * b_pot
    else:
        l2sq = g.cell_volume * float(np.sum(u2))
        b_pot = g.cell_volume * float(np.sum(problem.V * u2))
        b_poh = g.cell_volume * float(np.sum(problem.poh_weight * u2))
    _, F, conv = _nonlinear_parts(problem, vals)
    d = g.cell_volume * float(np.sum(conv * F))
    _check_finite(a=a, b_pot=b_pot, b_poh=b_poh, d=d)
    return EnergyBreakdown(a, b_pot, b_poh, d, problem.lam, problem.eps, l2sq, problem.N, problem.alpha)


def l2_gradient_array(problem: Problem, vals: np.ndarray, lam: float | None = None) -> np.ndarray:
    lam = problem.lam if lam is None else lam
    f, _, conv = _nonlinear_parts(problem, vals)
    return -laplacian_array(vals, problem.grid) + problem.V * vals - lam * conv * f


def l2_gradient(problem: Problem, u: Field, lam: float | None = None) -> Field:
    """``-Lap u + V_eps u - lam (I_alpha * F(u)) f(u)``."""
    if u.grid != problem.grid:
        raise ValueError("field grid does not match the problem grid")
    return Field(u.grid, l2_gradient_array(problem, u.values, lam))


def energy_and_gradients(problem: Problem, vals: np.ndarray):
    """Breakdown plus the L2 gradients of I and of P, sharing one convolution."""
    g = problem.grid
    f, F, conv = _nonlinear_parts(problem, vals)
    lap = laplacian_array(vals, g)
    u2 = vals * vals
    a = -g.cell_volume * float(np.sum(lap * vals))
    l2sq = g.cell_volume * float(np.sum(u2))
    b_pot = g.cell_volume * float(np.sum(problem.V * u2))
    b_poh = g.cell_volume * float(np.sum(problem.poh_weight * u2))
    d = g.cell_volume * float(np.sum(conv * F))
    _check_finite(a=a, b_pot=b_pot, b_poh=b_poh, d=d)
    br = EnergyBreakdown(a, b_pot, b_poh, d, problem.lam, problem.eps, l2sq, problem.N, problem.alpha)
    cf = problem.lam * conv * f
    grad_I = -lap + problem.V * vals - cf
    grad_P = -(problem.N - 2) * lap + problem.poh_weight * vals - (problem.N + problem.alpha) * cf
    return br, grad_I, grad_P


def lambda_membership(d: float, threshold: float = 0.0) -> bool:
    """``u`` in Lambda iff ``int (I_alpha * F(u)) F(u) > threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return d > threshold


def membership_threshold(br: EnergyBreakdown) -> float:
    return LAMBDA_REL_THRESHOLD * max(br.a + abs(br.b_pot), 1e-300)


def g_elem(t, N: int, alpha: float):
    """``2 + alpha - (N+alpha) t^(N-2) + (N-2) t^(N+alpha)``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        lt = np.log(t)
    e1 = np.expm1((N - 2) * lt)
    e2 = np.expm1((N + alpha) * lt)
    out = -(2 + alpha) * e1 + (N - 2) * (e2 - e1)
    return out if out.ndim else float(out)


def h_elem(t, N: int, alpha: float):
    """``alpha - (N+alpha) t^N + N t^(N+alpha)``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        lt = np.log(t)
    e1 = np.expm1(N * lt)
    e2 = np.expm1((N + alpha) * lt)
    out = -alpha * e1 + N * (e2 - e1)
    return out if out.ndim else float(out)


class FiberMap:
    """``zeta(t) = I_lam(u_t)`` and its derivative for one fixed ``u``.

    ``a``, ``d`` and the shell-aggregated weights of ``u^2`` are computed once;
    each evaluation then costs one potential evaluation per distinct node radius.
    """

    def __init__(self, problem: Problem, u: Field | np.ndarray, lam: float | None = None,
                 pspec: PotentialSpec | None = None, breakdown: EnergyBreakdown | None = None):
        vals = u.values if isinstance(u, Field) else u
        g = problem.grid
        self.N = problem.N
        self.alpha = problem.alpha
        self.lam = problem.lam if lam is None else lam
        self.pspec = problem.pspec if pspec is None else pspec
        self.pot_scale = problem.pot_scale
        if breakdown is None:
            _, F, conv = _nonlinear_parts(problem, vals)
            self.a = gradient_sq_norm_array(vals, g)
            self.d = g.cell_volume * float(np.sum(conv * F))
        else:
            self.a, self.d = breakdown.a, breakdown.d
        radii, inverse = g.radial_shells
        self.radii = radii
        self.weights = g.cell_volume * np.bincount(inverse, weights=(vals * vals).ravel(), minlength=radii.size)
        self.l2sq = float(np.sum(self.weights))

    @classmethod
    def from_scalars(cls, a: float, l2sq: float, d: float, Vinf: float, N: int, alpha: float,
                     lam: float = 1.0) -> FiberMap:
        """Fiber of a constant-potential problem given only ``a``, ``||u||^2`` and ``d``."""
        from .models import make_potential

        fb = cls.__new__(cls)
        fb.N, fb.alpha, fb.lam = N, alpha, lam
        fb.pspec = make_potential("constant", N, alpha, Vinf=Vinf)
        fb.pot_scale = 1.0
        fb.a, fb.d, fb.l2sq = float(a), float(d), float(l2sq)
        fb.radii = np.zeros(0)
        fb.weights = np.zeros(0)
        return fb

    def potential_term(self, t: float) -> float:
        """``int V(t x) u^2``."""
        if self.pspec.is_constant:
            return self.pspec.V_inf * self.l2sq
        return float(np.dot(self.pspec.value(self.pot_scale * t * self.radii), self.weights))

    def poh_potential_term(self, t: float) -> float:
        """``int [N V(t x) + grad V(t x) . (t x)] u^2``."""
        if self.pspec.is_constant:
            return self.N * self.pspec.V_inf * self.l2sq
        s = self.pot_scale * t * self.radii
        return float(np.dot(self.N * self.pspec.value(s) + self.pspec.radial_derivative(s), self.weights))

    def zeta(self, t: float, lam: float | None = None) -> float:
        if not t > 0:
            raise ValueError(f"fibering parameter must be positive, got {t}")
        lam = self.lam if lam is None else lam
        N, al = self.N, self.alpha
        return (t ** (N - 2) * self.a / 2 + t**N * self.potential_term(t) / 2
                - lam * t ** (N + al) * self.d / 2)

    def dzeta(self, t: float, lam: float | None = None) -> float:
        """``zeta'(t) = P(u_t) / t``."""
        if not t > 0:
            raise ValueError(f"fibering parameter must be positive, got {t}")
        lam = self.lam if lam is None else lam
        N, al = self.N, self.alpha
        return ((N - 2) * t ** (N - 3) * self.a / 2 + t ** (N - 1) * self.poh_potential_term(t) / 2
                - (N + al) * lam * t ** (N + al - 1) * self.d / 2)

    @property
    def scale(self) -> float:
        return abs(self.a) + abs(self.poh_potential_term(1.0)) + abs(self.d)


def fiber_eval(fiber: FiberMap, t: float) -> tuple[float, float]:
    return fiber.zeta(t), fiber.dzeta(t)


def key_inequality_gap(problem: Problem, u: Field, t: float, fiber: FiberMap | None = None) -> float:
    """``I(u) - [I(u_t) + (1-t^(N+a))/(N+a) P(u) + (1-theta) g(t) ||grad u||^2 / (2(N+a))]``.

    Nonnegative in the continuum whenever the potential satisfies (V1)-(V3)
    with the stored theta.
    """
    th = problem.pspec.theta
    if th is None or not 0 <= th < 1:
        raise ValueError("potential lacks an admissible theta for the key inequality")
    if not t > 0:
        raise ValueError("t must be positive")
    fb = FiberMap(problem, u) if fiber is None else fiber
    N, al = problem.N, problem.alpha
    I_u = fb.zeta(1.0)
    P_u = fb.dzeta(1.0)
    rhs = fb.zeta(t) + (-math.expm1((N + al) * math.log(t))) / (N + al) * P_u \
        + (1 - th) * g_elem(t, N, al) / (2 * (N + al)) * fb.a
    return I_u - rhs


def autonomous_identity_residual(a, l2sq, d, Vinf, lam, t, N: int, alpha: float):
    """Residual of the exact scaling identity for ``I_lam^inf``.

    ``I(u) - I(u_t) - (1 - t^(N+alpha))/(N+alpha) P(u) - [g(t) a + Vinf h(t) l2sq]/(2(N+alpha))``;
    vectorized over all arguments.
    """
    a, l2sq, d, t = (np.asarray(x, dtype=float) for x in (a, l2sq, d, t))
    Na = N + alpha
    I_u = (a + Vinf * l2sq) / 2 - lam * d / 2
    I_t = t ** (N - 2) * a / 2 + t**N * Vinf * l2sq / 2 - lam * t**Na * d / 2
    P_u = (N - 2) * a / 2 + N * Vinf * l2sq / 2 - Na * lam * d / 2
    corr = (g_elem(t, N, alpha) * a + Vinf * h_elem(t, N, alpha) * l2sq) / (2 * Na)
    return I_u - I_t - (1 - t**Na) / Na * P_u - corr


def identity_scale(a, l2sq, d, Vinf, lam, t, N: int, alpha: float):
    t = np.asarray(t, dtype=float)
    return (np.abs(a) + Vinf * np.abs(l2sq) + lam * np.abs(d)) * np.maximum(1.0, t ** (N + alpha))


def hardy_gap(u: Field) -> tuple[float, float]:
    """``(||grad u||^2 - (N-2)^2/4 int u^2/|x|^2, ||grad u||^2)``."""
    g = u.grid
    a = gradient_sq_norm_array(u.values, g)
    h = g.cell_volume * float(np.sum(u.values**2 / g.r2))
    return a - (g.dim - 2) ** 2 / 4 * h, a


def hls_ratio(problem: Problem, u: Field) -> float:
    """``d / (||u||_2^(2(N+a)/N) + ||u||_{2*}^(2(N+a)/(N-2)))``; diagnostic only."""
    N, al = problem.N, problem.alpha
    g = problem.grid
    br = energy_breakdown(problem, u)
    l2 = math.sqrt(br.l2sq)
    ps = 2 * N / (N - 2)
    lps = (g.cell_volume * float(np.sum(np.abs(u.values) ** ps))) ** (1 / ps)
    den = l2 ** (2 * (N + al) / N) + lps ** (2 * (N + al) / (N - 2))
    return br.d / den if den > 0 else 0.0


def l2_norm(vals: np.ndarray, grid: GridSpec) -> float:
    return math.sqrt(max(inner(vals, vals, grid), 0.0))
