"""Catalog of potentials and nonlinearities, plus sampled assumption checks.

Every catalog potential is radial about the origin, so ``V`` and the
Pohozaev weight ``grad V(x) . x = r V'(r)`` are functions of ``r = |x|``.
The minimum of each non-constant entry sits at ``x0 = 0``.

The theta-type constants are metadata.  When not supplied they are derived
from a dense one-dimensional radial scan at construction; ``check_assumptions``
then verifies them independently on sampled rays in ``R^N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import gamma

from .riesz import riesz_constant, unit_ball_volume

POTENTIAL_VARIANTS = (
    "constant", "remark14_i", "remark14_ii", "remark14_iii", "remark17", "remark110", "user_table",
)
NONLIN_VARIANTS = ("power_p", "pekar", "two_power")

PASS_MARGIN = -1e-9
_SCAN = np.logspace(-4, 4, 40001)


def _round_up(x: float, step: float = 0.01) -> float:
    return math.ceil(x / step - 1e-9) * step


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    variant: str
    params: dict
    V_inf: float
    V_max: float
    theta: float | None = None
    theta_p: float | None = None
    theta_pp: float | None = None
    R_bar: float | None = None
    x0: tuple | None = None
    table: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def is_constant(self) -> bool:
        return self.variant == "constant"

    @property
    def fd_radial(self) -> bool:
        """True when grad V . x comes from finite differences of tabulated data."""
        return self.variant == "user_table"

    def value(self, r):
        r = np.asarray(r, dtype=float)
        p = self.params
        v = self.variant
        if v == "constant":
            return np.full(r.shape, self.V_inf)
        if v == "remark14_i":
            return p["a"] - p["b"] / (r * r + 1)
        if v in ("remark14_ii", "remark17"):
            return p["a"] - p["b"] / (r ** p["beta"] + 1)
        if v == "remark14_iii":
            return p["a"] - p["b"] * np.exp(-(r ** p["beta"]))
        if v == "remark110":
            s = r ** p["beta"]
            return p["a"] - p["b"] * np.cos(s) / (1 + s)
        if v == "user_table":
            rt, vt = self.table
            _check_table_range(rt, r)
            return np.interp(r, rt, vt)
        raise ValueError(f"unknown potential variant {v!r}")

    def radial_derivative(self, r):
        """``grad V(x) . x`` as a function of ``r = |x|``."""
        r = np.asarray(r, dtype=float)
        p = self.params
        v = self.variant
        if v == "constant":
            return np.zeros(r.shape)
        if v == "remark14_i":
            return 2 * p["b"] * r * r / (r * r + 1) ** 2
        if v in ("remark14_ii", "remark17"):
            s = r ** p["beta"]
            return p["beta"] * p["b"] * s / (s + 1) ** 2
        if v == "remark14_iii":
            s = r ** p["beta"]
            return p["beta"] * p["b"] * s * np.exp(-s)
        if v == "remark110":
            s = r ** p["beta"]
            dVds = p["b"] * (np.sin(s) * (1 + s) + np.cos(s)) / (1 + s) ** 2
            return p["beta"] * s * dVds
        if v == "user_table":
            rt, vt = self.table
            _check_table_range(rt, r)
            return r * np.interp(r, rt, np.gradient(vt, rt))
        raise ValueError(f"unknown potential variant {v!r}")

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "params": {k: v for k, v in self.params.items()},
            "V_inf": self.V_inf,
            "V_max": self.V_max,
            "theta": self.theta,
            "theta_p": self.theta_p,
            "theta_pp": self.theta_pp,
            "R_bar": self.R_bar,
            "x0": list(self.x0) if self.x0 is not None else None,
            "fd_radial": self.fd_radial,
        }


def _check_table_range(rt, r):
    if np.any(r > rt[-1]) or np.any(r < 0):
        raise ValueError(f"user_table potential queried outside its tabulated radius [0, {rt[-1]}]")


def eval_potential(spec: PotentialSpec, x) -> tuple[float, float]:
    """``(V(x), grad V(x) . x)`` at a single point."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    r = float(np.sqrt(np.sum(x * x)))
    return float(spec.value(r)), float(spec.radial_derivative(r))


def _scan_radii(spec: PotentialSpec, s: np.ndarray = _SCAN) -> np.ndarray:
    """Scan radii restricted to the tabulated range of a ``user_table`` potential."""
    if spec.table is None:
        return s
    return s[s <= spec.table[0][-1] * (1 - 1e-6)]


def _radial_theta_v3(spec: PotentialSpec, N: int, alpha: float) -> float:
    # t -> phi(t) nonincreasing  <=>  s^2 [s G'(s) - alpha G(s)] <= theta (N-2)^3 (alpha+2)/4,
    # with G(s) = N V(s) + s V'(s) and s = t|x|.
    s = _scan_radii(spec)
    G = lambda r: N * spec.value(r) + spec.radial_derivative(r)
    eps = 1e-6
    Gp = (G(s * (1 + eps)) - G(s * (1 - eps))) / (2 * s * eps)
    q = s * s * (s * Gp - alpha * G(s))
    if N == 2:
        return 0.0 if q.max() <= 0 else math.inf
    return max(0.0, float(q.max()) * 4 / ((N - 2) ** 3 * (alpha + 2)))


def _radial_theta_v4(spec: PotentialSpec, N: int, alpha: float) -> tuple[float, float]:
    s = _scan_radii(spec)
    rd = spec.radial_derivative(s)
    V = spec.value(s)
    bad = rd > (N - 2) ** 2 / (2 * s * s)
    R_bar = float(s[np.argmax(bad)]) if bad.any() else 0.0
    sel = s >= R_bar
    ratio = np.max(rd[sel] / (alpha * V[sel]))
    return max(float(ratio), 0.0), R_bar


def _radial_theta_v6(spec: PotentialSpec, alpha: float) -> float:
    s = np.concatenate([[0.0], _scan_radii(spec)])
    return max(float(np.max(spec.radial_derivative(s) / (alpha * spec.value(s)))), 0.0)


def _remark_constraint(variant: str, p: dict, N: int, alpha: float) -> None:
    a, b = p.get("a"), p.get("b")
    if variant == "remark14_i":
        lhs = alpha * N * a + (alpha + 2) * (N - 2) ** 3
        mid = ((N - 2) * (alpha + 2) + 2 * (alpha + 4)) * b
        if not (a > b and lhs > mid > 0):
            raise ValueError(
                "remark14_i requires a > b and alpha*N*a + (alpha+2)(N-2)^3 > "
                f"[(N-2)(alpha+2) + 2(alpha+4)] b > 0; got {lhs:g} vs {mid:g}"
            )
    elif variant == "remark14_ii":
        if not (a >= (2 + alpha / N) * b > 0):
            raise ValueError(f"remark14_ii requires a >= (2 + alpha/N) b > 0 (a={a}, b={b})")
    elif variant == "remark14_iii":
        if not (a > b > 0):
            raise ValueError(f"remark14_iii requires a > b > 0 (a={a}, b={b})")
    elif variant in ("remark17", "remark110"):
        beta = p["beta"]
        if not (beta > 0 and alpha * a > (alpha + beta) * b > 0):
            raise ValueError(
                f"{variant} requires beta > 0 and alpha*a > (alpha+beta) b > 0 "
                f"(a={a}, b={b}, beta={beta})"
            )


def make_potential(variant: str, N: int, alpha: float, *, a=None, b=None, beta=None, Vinf=None,
                   radii=None, values=None, theta=None, theta_p=None, theta_pp=None,
                   R_bar=None) -> PotentialSpec:
    """Build a catalog potential for dimension ``N`` and Riesz order ``alpha``.

    ``remark14_ii`` and ``remark14_iii`` use ``alpha`` as their radial
    exponent.  Missing theta-type constants are derived by a radial scan and
    rounded up to the next 0.01; a scanned theta of 1 or more is stored as
    None, meaning (V3) is not claimed.
    """
    if variant not in POTENTIAL_VARIANTS:
        raise ValueError(f"unknown potential variant {variant!r}; choose from {POTENTIAL_VARIANTS}")
    table = None
    x0 = (0.0,) * N
    if variant == "constant":
        if Vinf is None or not Vinf > 0:
            raise ValueError("constant potential needs Vinf > 0 (V1: V_inf > 0)")
        params = {"Vinf": float(Vinf)}
        V_inf = V_max = float(Vinf)
        x0 = None
    elif variant == "user_table":
        if radii is None or values is None or Vinf is None:
            raise ValueError("user_table potential needs radii, values and Vinf")
        rt = np.asarray(radii, dtype=float)
        vt = np.asarray(values, dtype=float)
        if rt.ndim != 1 or rt.shape != vt.shape or rt.size < 2 or np.any(np.diff(rt) <= 0) or rt[0] != 0:
            raise ValueError("user_table radii must start at 0, increase strictly and match values")
        table = (rt, vt)
        params = {"Vinf": float(Vinf)}
        V_inf = float(Vinf)
        V_max = float(max(vt.max(), V_inf))
        x0 = (float(rt[np.argmin(vt)]),) + (0.0,) * (N - 1)
    else:
        if a is None or b is None:
            raise ValueError(f"{variant} needs parameters a and b")
        params = {"a": float(a), "b": float(b)}
        if variant == "remark14_i":
            params["beta"] = 2.0
        elif variant in ("remark14_ii", "remark14_iii"):
            params["beta"] = float(alpha)
        else:
            if beta is None:
                raise ValueError(f"{variant} needs parameter beta")
            params["beta"] = float(beta)
        _remark_constraint(variant, params, N, alpha)
        V_inf = params["a"]
        V_max = V_inf
    spec = PotentialSpec(variant, params, V_inf, V_max, x0=x0, table=table)
    if variant == "remark110":
        s = np.linspace(0, 200, 400001)
        vals = spec.value(s)
        spec = _replace(spec, V_max=float(max(vals.max(), V_inf)))
    if theta is None:
        theta = _round_up(_radial_theta_v3(spec, N, alpha))
        # No admissible theta in [0, 1): the variant does not claim (V3).
        theta = theta if theta < 1 else None
    if theta_p is None or R_bar is None:
        tp, rb = _radial_theta_v4(spec, N, alpha)
        theta_p = theta_p if theta_p is not None else max(_round_up(tp), 0.01)
        R_bar = R_bar if R_bar is not None else rb
    if theta_pp is None:
        theta_pp = max(_round_up(_radial_theta_v6(spec, alpha)), 0.01)
    return _replace(spec, theta=None if theta is None else float(theta), theta_p=float(theta_p),
                    theta_pp=float(theta_pp), R_bar=float(R_bar))


def _replace(spec: PotentialSpec, **kw) -> PotentialSpec:
    d = {f: getattr(spec, f) for f in spec.__dataclass_fields__}
    d.update(kw)
    return PotentialSpec(**d)


@dataclass(frozen=True)
class NonlinSpec:
    variant: str
    p: float
    q: float | None = None
    c1: float = 1.0
    c2: float = 0.0
    s0: float = 1.0

    def f(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c1 * np.abs(t) ** (self.p - 2) * t
        if self.variant == "two_power":
            out = out + self.c2 * np.abs(t) ** (self.q - 2) * t
        return out

    def F(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c1 * np.abs(t) ** self.p / self.p
        if self.variant == "two_power":
            out = out + self.c2 * np.abs(t) ** self.q / self.q
        return out

    def f_and_F(self, t):
        """Both values sharing one ``|t|^(p-2)`` evaluation."""
        t = np.asarray(t, dtype=float)
        w = np.abs(t) ** (self.p - 2)
        if self.p == 2:
            w = np.ones_like(t)
        f = self.c1 * w * t
        F = f * t / self.p
        if self.variant == "two_power":
            w2 = np.abs(t) ** (self.q - 2)
            f2 = self.c2 * w2 * t
            f = f + f2
            F = F + f2 * t / self.q
        return f, F

    def envelope_constant(self, N: int, alpha: float, t_range=(1e-3, 1e3), num=2001) -> float:
        """Sampled ``sup |f(t) t| / (|t|^((N+alpha)/N) + |t|^((N+alpha)/(N-2)))``."""
        t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), num)
        t = np.concatenate([-t[::-1], t])
        return float(np.max(_envelope_ratio(self, t, N, alpha)))

    def describe(self) -> dict:
        return {"variant": self.variant, "p": self.p, "q": self.q, "c1": self.c1, "c2": self.c2,
                "s0": self.s0}


def _envelope_ratio(spec: NonlinSpec, t, N, alpha):
    lo = (N + alpha) / N
    hi = (N + alpha) / (N - 2) if N > 2 else math.inf
    env = np.abs(t) ** lo + (np.abs(t) ** hi if math.isfinite(hi) else 0.0)
    return np.abs(spec.f(t) * t) / env


def make_nonlinearity(variant: str, *, p=None, q=None, c1=1.0, c2=1.0, s0=1.0) -> NonlinSpec:
    if variant not in NONLIN_VARIANTS and variant != "power":
        raise ValueError(f"unknown nonlinearity {variant!r}; choose from {NONLIN_VARIANTS}")
    if variant == "pekar":
        return NonlinSpec("power_p", 2.0, c1=1.0, s0=float(s0))
    if variant in ("power_p", "power"):
        if p is None or not p > 1:
            raise ValueError("power nonlinearity needs exponent p > 1")
        return NonlinSpec("power_p", float(p), c1=float(c1), s0=float(s0))
    if p is None or q is None or not (p > 1 and q > 1):
        raise ValueError("two_power nonlinearity needs exponents p, q > 1")
    return NonlinSpec("two_power", float(p), float(q), float(c1), float(c2), float(s0))


def eval_nonlinearity(spec: NonlinSpec, t: float) -> tuple[float, float]:
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    return float(spec.f(t)), float(spec.F(t))


@dataclass(frozen=True)
class SamplingConfig:
    n_rays: int = 32
    n_radii: int = 64
    n_scales: int = 64
    r_min: float = 1e-2
    r_max: float = 1e2
    t_min: float = 1e-2
    t_max: float = 1e2
    f_decades: int = 8
    seed: int = 0


@dataclass
class Verdict:
    status: str  # "pass" | "fail" | "not-applicable"
    margin: float | None
    witness: Any = None
    note: str = ""

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        return {"status": self.status, "margin": self.margin, "witness": w, "note": self.note}


@dataclass
class AssumptionReport:
    verdicts: dict[str, Verdict]
    sampling: str

    def passed(self, name: str) -> bool:
        return self.verdicts[name].status == "pass"

    def to_dict(self) -> dict:
        return {"sampling": self.sampling, "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}}


def _verdict(margins: np.ndarray, witnesses, note="") -> Verdict:
    margins = np.asarray(margins, dtype=float).ravel()
    if margins.size == 0:
        raise ValueError("empty sample set")
    k = int(np.argmin(margins))
    m = float(margins[k])
    w = witnesses[k] if witnesses is not None else None
    if isinstance(w, np.ndarray):
        w = w.tolist()
    return Verdict("pass" if m >= PASS_MARGIN else "fail", m, w, note)


def _sample_points(N: int, cfg: SamplingConfig):
    rng = np.random.default_rng(cfg.seed)
    dirs = rng.standard_normal((cfg.n_rays, N))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.logspace(np.log10(cfg.r_min), np.log10(cfg.r_max), cfg.n_radii)
    pts = dirs[:, None, :] * radii[None, :, None]
    return pts.reshape(-1, N), dirs, radii


def check_assumptions(pspec: PotentialSpec, nspec: NonlinSpec, N: int, alpha: float,
                      sampling: SamplingConfig | None = None) -> AssumptionReport:
    """Evaluate (V1)-(V6) and (F1)-(F3) on sampled points, rays and scales."""
    cfg = sampling or SamplingConfig()
    if min(cfg.n_rays, cfg.n_radii, cfg.n_scales) < 2:
        raise ValueError("empty sample set")
    pts, dirs, radii = _sample_points(N, cfg)
    if pspec.table is not None:
        keep = np.linalg.norm(pts, axis=1) <= pspec.table[0][-1]
        pts = pts[keep]
    r = np.linalg.norm(pts, axis=1)
    V = pspec.value(r)
    rd = pspec.radial_derivative(r)
    out: dict[str, Verdict] = {}

    out["V1"] = _verdict(np.minimum(V, pspec.V_inf), pts, "min over samples of V and V_inf")
    out["V2"] = _verdict(pspec.V_inf - V, pts, "V_inf - V")

    if pspec.theta is None:
        out["V3"] = Verdict("not-applicable", None, note="no theta metadata")
    elif pspec.theta >= 1:
        out["V3"] = Verdict("fail", 1 - pspec.theta, None, "stored theta outside [0, 1)")
    else:
        t = np.logspace(np.log10(cfg.t_min), np.log10(cfg.t_max), cfg.n_scales)
        rr = radii[:, None]
        if pspec.table is not None:
            rr = rr[rr[:, 0] * cfg.t_max <= pspec.table[0][-1]]
        s = rr * t[None, :]
        phi = (N * pspec.value(s) + pspec.radial_derivative(s)) / t**alpha
        phi = phi + (N - 2) ** 3 * pspec.theta / (4 * t ** (alpha + 2) * rr**2)
        drop = (phi[:, :-1] - phi[:, 1:]) / np.maximum(np.abs(phi[:, :-1]) + np.abs(phi[:, 1:]), 1e-300)
        wit = np.stack(np.broadcast_arrays(rr, t[None, :-1]), axis=-1).reshape(-1, 2)
        out["V3"] = _verdict(drop, wit, f"relative decrease along rays (theta={pspec.theta})")

    if pspec.theta_p is None or pspec.R_bar is None:
        out["V4"] = Verdict("not-applicable", None, note="no theta' metadata")
    elif not (0 < pspec.theta_p < 1):
        out["V4"] = Verdict("fail", min(pspec.theta_p, 1 - pspec.theta_p), None, "theta' outside (0, 1)")
    else:
        bound = np.where(r < pspec.R_bar, (N - 2) ** 2 / (2 * r * r), pspec.theta_p * alpha * V)
        out["V4"] = _verdict(bound - rd, pts, f"two-branch bound (theta'={pspec.theta_p}, R={pspec.R_bar:g})")

    if pspec.x0 is None:
        vmin = float(V.min())
        out["V5"] = _verdict([pspec.V_inf - vmin], [None], "no interior minimizer recorded")
        out["V5"].status = "fail" if pspec.V_inf - vmin <= 0 else out["V5"].status
    else:
        v0 = float(pspec.value(np.linalg.norm(pspec.x0)))
        m = np.concatenate([[pspec.V_inf - v0, v0], V - v0])
        w = [list(pspec.x0), list(pspec.x0)] + list(pts)
        ver = _verdict(m, w, "V_inf - V(x0), V(x0), V - V(x0)")
        if pspec.V_inf - v0 <= 0 or v0 <= 0:
            ver.status = "fail"
        out["V5"] = ver

    if pspec.theta_pp is None:
        out["V6"] = Verdict("not-applicable", None, note="no theta'' metadata")
    elif not (0 < pspec.theta_pp < 1):
        out["V6"] = Verdict("fail", min(pspec.theta_pp, 1 - pspec.theta_pp), None, "theta'' outside (0, 1)")
    else:
        out["V6"] = _verdict(pspec.theta_pp * alpha * V - rd, pts, f"cone condition (theta''={pspec.theta_pp})")

    out.update(_check_f(nspec, N, alpha, cfg))
    desc = (f"{cfg.n_rays} rays x {cfg.n_radii} radii in [{cfg.r_min:g}, {cfg.r_max:g}], "
            f"{cfg.n_scales} scales in [{cfg.t_min:g}, {cfg.t_max:g}], seed {cfg.seed}")
    return AssumptionReport(out, desc)


def _check_f(nspec: NonlinSpec, N: int, alpha: float, cfg: SamplingConfig) -> dict[str, Verdict]:
    out = {}
    C0 = nspec.envelope_constant(N, alpha)
    k = cfg.f_decades
    t = np.logspace(-k, k, 64 * k + 1)
    t = np.concatenate([-t[::-1], t])
    ratio = _envelope_ratio(nspec, t, N, alpha)
    out["F1"] = _verdict((C0 - ratio) / C0, t, f"envelope ratio over 1e-{k}..1e{k} vs C0={C0:.6g}")

    lo = (N + alpha) / N
    hi = (N + alpha) / (N - 2) if N > 2 else math.inf
    tp = np.logspace(-k, k, 8 * k + 1)
    margins, wits = [], []
    for sgn in (1.0, -1.0):
        small = np.abs(nspec.F(sgn * tp[: 2 * k])) / tp[: 2 * k] ** lo
        big = np.abs(nspec.F(sgn * tp[-2 * k:])) / tp[-2 * k:] ** hi
        # log-slope of the ratio must be positive near 0 and negative near infinity
        s_small = np.diff(np.log(np.maximum(small, 1e-300))) / np.diff(np.log(tp[: 2 * k]))
        s_big = -np.diff(np.log(np.maximum(big, 1e-300))) / np.diff(np.log(tp[-2 * k:]))
        margins += list(s_small - 1e-8) + list(s_big - 1e-8)
        wits += list(sgn * tp[: 2 * k - 1]) + list(sgn * tp[-2 * k + 1:])
        if np.all(small == 0) and np.all(big == 0):
            margins += [0.0]
            wits += [sgn]
    out["F2"] = _verdict(margins, wits, f"log-slopes of F/|t|^{lo:.4g} near 0 and F/|t|^{hi:.4g} near infinity")
    Fs0 = float(nspec.F(nspec.s0))
    out["F3"] = Verdict("pass" if Fs0 != 0 else "fail", abs(Fs0), nspec.s0, "F(s0) != 0")
    return out


def sobolev_constant(N: int) -> float:
    """Sharp constant in ``S ||u||_{2*}^2 <= ||grad u||_2^2``."""
    sphere = 2 * math.pi ** ((N + 1) / 2) / math.gamma((N + 1) / 2)
    return N * (N - 2) / 4 * sphere ** (2 / N)


def hls_constant(N: int, alpha: float) -> float:
    """Sharp diagonal HLS constant times the Riesz normalization.

    Bounds ``int (I_alpha * g) g <= C1 ||g||_{2N/(N+alpha)}^2``.
    """
    lam = N - alpha
    c = (math.pi ** (lam / 2) * gamma(N / 2 - lam / 2) / gamma(N - lam / 2)
         * (gamma(N / 2) / gamma(N)) ** (-1 + lam / N))
    return float(riesz_constant(alpha, N) * c)


def rho0(gamma1: float, C1: float, N: int, alpha: float) -> float:
    return min(1.0, (gamma1 / (2 * (1 + C1))) ** (N / (2 * alpha)))


def diagnostic_constants(pspec: PotentialSpec, N: int, alpha: float, S: float | None = None,
                         C1: float | None = None) -> dict:
    """Coercivity constants gamma_1..gamma_3 and the manifold radius rho_0.

    Reported as diagnostics only; S and C1 default to the sharp Sobolev and
    HLS constants.
    """
    S = sobolev_constant(N) if S is None else S
    C1 = hls_constant(N, alpha) if C1 is None else C1
    if not (S > 0 and C1 > 0):
        raise ValueError("Sobolev constant S and HLS constant C1 must be positive")
    if pspec.theta is None or not 0 <= pspec.theta < 1:
        raise ValueError(f"potential has no admissible theta in [0, 1) (theta={pspec.theta})")
    th, Vinf = pspec.theta, pspec.V_inf
    wN = unit_ball_volume(N)
    s = np.concatenate([[0.0], _SCAN])
    if pspec.table is not None:
        s = s[s <= pspec.table[0][-1]]
    V = pspec.value(s)
    M0 = float(np.max(np.abs(pspec.radial_derivative(s))))
    gamma2 = N - 2 + (2 + alpha) * th + (N + alpha) * Vinf

    low = V < Vinf / 2
    R_v = float(s[np.nonzero(low)[0][-1] + 1]) if low.any() else 0.0
    K = (N - 2) ** 2 * (2 + alpha) * th / 4 + M0 + alpha * Vinf
    target = (N + alpha) * Vinf / 4
    pred = lambda R: R >= R_v and K * R ** (-N) < target
    hi = 1.0
    while not pred(hi):
        hi *= 2
    lo = hi / 2
    while pred(lo):
        hi, lo = lo, lo / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    R = hi
    gamma1 = min((1 - th) * (N - 2) / 2, (1 - th) * (N - 2) * S / (2 * wN ** (2 / N)),
                 (N + alpha) * R ** (-alpha) * Vinf / 4)

    gamma3 = None
    if pspec.theta_p is not None:
        Vmin = float(V.min())
        if Vmin > 0:
            gamma3 = alpha * min(1.0, (1 - pspec.theta_p) * Vmin)
        else:
            gamma3 = min(alpha / 2, alpha * S / (2 * wN ** (2 / N) * max(R_v, 1.0) ** 2),
                         (1 - pspec.theta_p) * alpha * Vinf / 2)
    return {
        "gamma1": gamma1, "gamma2": gamma2, "gamma3": gamma3, "rho0": rho0(gamma1, C1, N, alpha),
        "R": R, "M0": M0, "S": S, "C1": C1,
    }
