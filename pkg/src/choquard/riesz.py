"""Free-space Riesz potential ``I_alpha * g`` on the box grid.

The convolution is applied as ``h^N sum_j K(x_i - x_j) g_j`` with a kernel
laid out circularly on a zero-padded grid of ``2n`` points per axis, so one
forward/inverse real FFT pair gives the free-space result without wrap-around.

Two kernels are available.

``truncated`` (default): the Riesz kernel cut off at the box diameter
``R = sqrt(N) L`` has the radial Fourier transform

    K_R(k) = A (2 pi)^(N/2) |k|^(-alpha) G(|k| R),
    G(z) = int_0^z s^(alpha - N/2) J_(N/2 - 1)(s) ds,

which is smooth at ``k = 0``.  Sampling it on a grid padded so that its
period exceeds ``L + R`` and transforming back gives the kernel that
convolves the trigonometric interpolant of ``g`` exactly, so smooth fields
see spectral accuracy.  Only offsets within ``[-n, n)`` are kept.

``sampled``: the kernel value at each offset, with the origin cell carrying
the kernel average over the ball of volume ``h^N``.  Second-order accurate;
used when the oversampled precomputation would not fit in memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, jv

from . import grid as _g
from .grid import Field, GridSpec

DEFAULT_MAX_PADDED = 2**27
OVERSAMPLED_MAX = 2**25
DIRECT_MAX_NODES = 4096
_SERIES_Z0 = 2.0
_GL_NODES, _GL_W = np.polynomial.legendre.leggauss(20)


def riesz_constant(alpha: float, N: int) -> float:
    """``Gamma((N-alpha)/2) / (Gamma(alpha/2) 2^alpha pi^(N/2))``."""
    _check_alpha(alpha, N)
    return float(gamma((N - alpha) / 2) / (gamma(alpha / 2) * 2.0**alpha * math.pi ** (N / 2)))


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def _check_alpha(alpha: float, N: int) -> None:
    if not (math.isfinite(alpha) and 0 < alpha < N):
        raise ValueError(f"Riesz order must satisfy 0 < alpha < N (alpha={alpha}, N={N})")


def origin_cell_value(alpha: float, N: int, h: float) -> float:
    """Kernel average over the ball of volume ``h^N`` centred at the origin."""
    A = riesz_constant(alpha, N)
    wN = unit_ball_volume(N)
    rc = (h**N / wN) ** (1.0 / N)
    return A * N * wN * rc**alpha / (alpha * h**N)


def sampled_kernel(grid: GridSpec, alpha: float, offsets: np.ndarray, r_trunc: float) -> np.ndarray:
    """Kernel value for integer offset vectors (last axis = dimension)."""
    A = riesz_constant(alpha, grid.dim)
    r = grid.h * np.sqrt(np.sum(offsets.astype(np.float64) ** 2, axis=-1))
    out = np.zeros(r.shape)
    inside = (r > 0) & (r <= r_trunc)
    out[inside] = A * r[inside] ** (alpha - grid.dim)
    out[r == 0] = origin_cell_value(alpha, grid.dim, grid.h)
    return out


def _bessel_moment_series(z: np.ndarray, N: int, alpha: float) -> np.ndarray:
    nu = N / 2 - 1
    out = np.zeros_like(z)
    for k in range(40):
        out += ((-1) ** k * 2.0 ** (-2 * k - nu) * z ** (alpha + 2 * k)
                / ((alpha + 2 * k) * math.factorial(k) * gamma(k + nu + 1)))
    return out


def bessel_moment(z, N: int, alpha: float) -> np.ndarray:
    """``G(z) = int_0^z s^(alpha - N/2) J_(N/2-1)(s) ds`` for ``z >= 0``.

    Power series up to ``z = 2``, then unit Gauss-Legendre panels.
    """
    z = np.asarray(z, dtype=float)
    nu = N / 2 - 1
    out = np.empty_like(z)
    small = z <= _SERIES_Z0
    out[small] = _bessel_moment_series(z[small], N, alpha)
    if np.all(small):
        return out
    zb = z[~small]
    npan = int(math.ceil(zb.max() - _SERIES_Z0)) + 1

    def f(s):
        return s ** (alpha - N / 2) * jv(nu, s)

    starts = _SERIES_Z0 + np.arange(npan)
    panels = 0.5 * (f(starts[:, None] + (_GL_NODES + 1) / 2) @ _GL_W)
    g0 = _bessel_moment_series(np.array([_SERIES_Z0]), N, alpha)[0]
    cum = np.concatenate([[g0], g0 + np.cumsum(panels)])
    i = np.floor(zb - _SERIES_Z0).astype(np.int64)
    lo = _SERIES_Z0 + i
    wid = zb - lo
    part = 0.5 * wid * (f(lo[:, None] + wid[:, None] * (_GL_NODES + 1) / 2) @ _GL_W)
    out[~small] = cum[i] + part
    return out


def truncated_kernel_transform(k, alpha: float, N: int, R: float) -> np.ndarray:
    """Fourier transform of ``A |x|^(alpha-N) 1{|x| <= R}`` at radial frequency ``k``."""
    k = np.asarray(k, dtype=float)
    A = riesz_constant(alpha, N)
    out = np.empty_like(k)
    zero = k == 0
    c = A * (2 * math.pi) ** (N / 2)
    out[zero] = c * R**alpha / (2 ** (N / 2 - 1) * alpha * math.gamma(N / 2))
    kk = k[~zero]
    out[~zero] = c * kk ** (-alpha) * bessel_moment(kk * R, N, alpha)
    return out


def oversampling_factor(N: int) -> int:
    """Smallest integer padding whose period exceeds ``(1 + sqrt(N)) L``."""
    return int(math.floor(1 + math.sqrt(N))) + 1


def truncated_kernel(grid: GridSpec, alpha: float) -> np.ndarray:
    """Real-space kernel on offsets ``[-n, n)^N`` (circular layout, ``2n`` per axis)."""
    _check_alpha(alpha, grid.dim)
    N, n = grid.dim, grid.n
    q = oversampling_factor(N)
    m = q * n
    if m**N > OVERSAMPLED_MAX:
        raise MemoryError(f"oversampled kernel grid {m}^{N} exceeds {OVERSAMPLED_MAX} points")
    R = math.sqrt(N) * grid.L
    dk = 2 * math.pi / (q * grid.L)
    full = np.fft.fftfreq(m, d=1.0 / m)
    half = np.fft.rfftfreq(m, d=1.0 / m)
    m2 = np.zeros((m,) * (N - 1) + (half.size,), dtype=np.int64)
    for ax in range(N):
        s = [1] * N
        fr = half if ax == N - 1 else full
        s[ax] = fr.size
        m2 = m2 + (fr.astype(np.int64) ** 2).reshape(s)
    uniq, inv = np.unique(m2.ravel(), return_inverse=True)
    spec = truncated_kernel_transform(dk * np.sqrt(uniq.astype(float)), alpha, N, R)[inv]
    kern = _g._irfftn(spec.reshape(m2.shape), (m,) * N) / grid.cell_volume
    idx = np.concatenate([np.arange(n), np.arange(m - n, m)])
    return kern[np.ix_(*([idx] * N))]


@dataclass(frozen=True, eq=False)
class RieszPlan:
    """Precomputed Fourier multiplier for one (grid, alpha) pair."""

    grid: GridSpec
    alpha: float
    riesz_A: float
    pad: int
    r_trunc: float
    method: str
    multiplier: np.ndarray = field(repr=False)

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return (self.pad * self.grid.n,) * self.grid.dim

    def fingerprint(self) -> str:
        import hashlib

        return hashlib.sha256(np.ascontiguousarray(self.multiplier).tobytes()).hexdigest()[:16]


def _padded_offsets(n: int, pad: int, N: int) -> np.ndarray:
    m = pad * n
    idx = np.arange(m)
    off1 = np.where(idx < m // 2, idx, idx - m)
    mesh = np.meshgrid(*([off1] * N), indexing="ij")
    return np.stack(mesh, axis=-1)


def kernel_on_offsets(grid: GridSpec, alpha: float, method: str = "truncated",
                      r_trunc: float | None = None) -> np.ndarray:
    """Kernel values on the circular ``2n``-point offset layout."""
    if method == "truncated":
        return truncated_kernel(grid, alpha)
    if method == "sampled":
        if r_trunc is None:
            r_trunc = grid.L * math.sqrt(grid.dim)
        return sampled_kernel(grid, alpha, _padded_offsets(grid.n, 2, grid.dim), r_trunc)
    raise ValueError(f"unknown kernel method {method!r}")


def plan_riesz(grid: GridSpec, alpha: float, method: str = "auto",
               max_padded: int = DEFAULT_MAX_PADDED) -> RieszPlan:
    """Fourier multiplier for ``I_alpha *`` on ``grid``.

    ``method="auto"`` picks the truncated kernel unless its oversampled
    precomputation exceeds the memory cap, then falls back to sampling.
    """
    _check_alpha(alpha, grid.dim)
    pad = 2
    m = pad * grid.n
    if m**grid.dim > max_padded:
        raise ValueError(
            f"padded transform of {m}^{grid.dim} points exceeds the memory cap of {max_padded}"
        )
    if method == "auto":
        method = "truncated" if (oversampling_factor(grid.dim) * grid.n) ** grid.dim <= OVERSAMPLED_MAX \
            else "sampled"
    r_trunc = grid.L * math.sqrt(grid.dim)
    kern = kernel_on_offsets(grid, alpha, method)
    mult = _g._rfftn(kern).real
    # Even kernel: symmetrize along the full-spectrum axes so negation symmetry is exact.
    for ax in range(grid.dim - 1):
        neg = np.roll(np.flip(mult, axis=ax), 1, axis=ax)
        mult = 0.5 * (mult + neg)
    mult.flags.writeable = False
    return RieszPlan(grid, float(alpha), riesz_constant(alpha, grid.dim), pad, float(r_trunc), method, mult)


def convolve_array(plan: RieszPlan, g: np.ndarray) -> np.ndarray:
    grid = plan.grid
    padded = np.zeros(plan.padded_shape)
    padded[(slice(0, grid.n),) * grid.dim] = g
    out = _g._irfftn(plan.multiplier * _g._rfftn(padded), plan.padded_shape)
    return grid.cell_volume * out[(slice(0, grid.n),) * grid.dim]


def riesz_convolve(plan: RieszPlan, g: Field) -> Field:
    """``h^N sum_j K(x_i - x_j) g_j`` evaluated through the padded FFT."""
    if g.grid != plan.grid:
        raise ValueError("field grid does not match the Riesz plan grid")
    return Field(plan.grid, convolve_array(plan, g.values))


def riesz_convolve_direct(grid: GridSpec, alpha: float, g: Field, method: str = "truncated") -> Field:
    """Brute-force double sum over node pairs with the same kernel (test oracle)."""
    if g.grid != grid:
        raise ValueError("field grid does not match")
    if grid.size > DIRECT_MAX_NODES:
        raise ValueError(f"direct sum limited to {DIRECT_MAX_NODES} nodes, grid has {grid.size}")
    table = kernel_on_offsets(grid, alpha, method)
    idx = np.stack(np.meshgrid(*([np.arange(grid.n)] * grid.dim), indexing="ij"), axis=-1)
    idx = idx.reshape(-1, grid.dim)
    off = (idx[:, None, :] - idx[None, :, :]) % (2 * grid.n)
    K = table[tuple(off[..., d] for d in range(grid.dim))]
    out = grid.cell_volume * (K @ g.values.ravel())
    return Field(grid, out.reshape(grid.shape))


def riesz_energy(plan: RieszPlan, g: np.ndarray) -> float:
    """``int (I_alpha * g) g``."""
    return float(plan.grid.cell_volume * np.vdot(convolve_array(plan, g).ravel(), g.ravel()))
