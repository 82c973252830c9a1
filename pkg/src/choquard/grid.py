"""Periodic-box discretization, quadrature and spectral operators.

The box is ``[-L/2, L/2)^N`` sampled with ``n`` points per axis at the
half-cell offset ``x_i = -L/2 + (i + 1/2) h``.  With ``n`` even no node sits
on the origin, so integrands such as ``u^2/|x|^2`` can be sampled directly.

Derivatives use the Fourier multiplier ``-|k|^2`` with ``k = 2 pi m / L`` and
integrals use the rectangle rule ``h^N sum(values)``, which is the quadrature
consistent with Parseval's identity for the discrete transform.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft

logger = logging.getLogger(__name__)

MAX_DIM = 4
TAIL_SHELL = 0.1
TAIL_TOL = 1e-4

# Worker count for scipy.fft; pocketfft splits independent 1-D transforms,
# so the result does not depend on it.
FFT_WORKERS = 1


def set_fft_workers(k: int) -> None:
    global FFT_WORKERS
    FFT_WORKERS = max(1, int(k))


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-L/2, L/2)^dim`` with half-cell offset."""

    dim: int
    L: float
    n: int
    h: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h", self.L / self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """1-D node coordinates, identical along every axis."""
        x = -self.L / 2 + (np.arange(self.n) + 0.5) * self.h
        x.flags.writeable = False
        return x

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for d in range(self.dim):
            s = [1] * self.dim
            s[d] = self.n
            out.append(self.axis.reshape(s))
        return out

    @cached_property
    def r2(self) -> np.ndarray:
        """Squared distance of every node from the origin."""
        acc = np.zeros(self.shape)
        for c in self.coords():
            acc = acc + c * c
        acc.flags.writeable = False
        return acc

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.sqrt(self.r2)
        r.flags.writeable = False
        return r

    @cached_property
    def radial_shells(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct node radii and the inverse index mapping nodes onto them.

        Radial integrands ``sum_i w(|x_i|) g_i`` collapse to a sum over a few
        thousand shells, which makes repeated evaluation at scaled radii cheap.
        """
        r2_unique, inverse = np.unique(self.r2.ravel(), return_inverse=True)
        r = np.sqrt(r2_unique)
        r.flags.writeable = False
        inverse.flags.writeable = False
        return r, inverse

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the rfftn half-spectrum layout."""
        k_full = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        k_half = 2 * np.pi * np.fft.rfftfreq(self.n, d=self.h)
        acc = np.zeros(self.shape[:-1] + (self.n // 2 + 1,))
        for d in range(self.dim):
            s = [1] * self.dim
            k = k_half if d == self.dim - 1 else k_full
            s[d] = k.size
            acc = acc + (k * k).reshape(s)
        acc.flags.writeable = False
        return acc

    @cached_property
    def rfft_weight(self) -> np.ndarray:
        """Multiplicity of each stored rfftn coefficient in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def sidecar(self) -> dict:
        return {
            "dim": self.dim,
            "L": self.L,
            "n": self.n,
            "offset": "half-cell",
            "order": "row-major",
        }


def make_grid(N: int, L: float, n: int) -> GridSpec:
    """Validated grid constructor."""
    if int(N) != N or N < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {N}")
    if N > MAX_DIM:
        raise ValueError(f"dimension {N} exceeds supported maximum {MAX_DIM}")
    if not (math.isfinite(L) and L > 0):
        raise ValueError(f"box length must be positive and finite, got {L}")
    if int(n) != n or n < 8:
        raise ValueError(f"points per axis must be an integer >= 8, got {n}")
    if n % 2:
        raise ValueError(f"points per axis must be even (odd n={n} puts a node at the origin)")
    return GridSpec(int(N), float(L), int(n))


@dataclass(frozen=True, eq=False)
class Field:
    """Real scalar samples on a grid; values are stored read-only."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size != self.grid.size:
            raise ValueError(f"field has {v.size} values, grid needs {self.grid.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        if v.flags.writeable:
            v = v.copy()
            v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[..., np.ndarray]) -> Field:
        """Sample ``fn(x_1, ..., x_N)`` on broadcast coordinate arrays."""
        vals = np.broadcast_to(fn(*grid.coords()), grid.shape)
        return cls(grid, np.array(vals, dtype=np.float64))

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field:
        return cls(grid, np.zeros(grid.shape))

    def same_grid(self, other: Field) -> bool:
        return self.grid == other.grid


def gaussian(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0, center=None) -> Field:
    """``A exp(-|x - c|^2 / (2 w^2))``."""
    c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    acc = np.zeros(grid.shape)
    for d, x in enumerate(grid.coords()):
        acc = acc + (x - c[d]) ** 2
    return Field(grid, amplitude * np.exp(-acc / (2.0 * width**2)))


def quadrature(u: Field | np.ndarray, grid: GridSpec | None = None) -> float:
    """Rectangle-rule integral ``h^N sum(u)``."""
    if isinstance(u, Field):
        grid, vals = u.grid, u.values
    else:
        vals = u
    return float(grid.cell_volume * np.sum(vals))


def inner(u: np.ndarray, v: np.ndarray, grid: GridSpec) -> float:
    return float(grid.cell_volume * np.vdot(u.ravel(), v.ravel()))


def _rfftn(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a, workers=FFT_WORKERS)


def _irfftn(a: np.ndarray, shape) -> np.ndarray:
    return sfft.irfftn(a, s=shape, workers=FFT_WORKERS)


def laplacian_array(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _irfftn(-grid.k2 * _rfftn(vals), grid.shape)


def gradient_sq_norm_array(vals: np.ndarray, grid: GridSpec) -> float:
    uk = _rfftn(vals)
    w = grid.rfft_weight
    s = np.sum(w * np.sum(grid.k2 * (uk.real**2 + uk.imag**2), axis=tuple(range(grid.dim - 1))))
    return float(grid.cell_volume * s / grid.size)


def fourier_sq_norm(u: Field) -> float:
    """``h^N / n^N * sum |u_hat|^2``, the Fourier-side L2 norm squared."""
    uk = _rfftn(u.values)
    g = u.grid
    s = np.sum(g.rfft_weight * np.sum(uk.real**2 + uk.imag**2, axis=tuple(range(g.dim - 1))))
    return float(g.cell_volume * s / g.size)


def gradient_sq_norm(u: Field) -> float:
    """Spectral ``||grad u||_2^2`` via Parseval."""
    return gradient_sq_norm_array(u.values, u.grid)


def laplacian(u: Field) -> Field:
    return Field(u.grid, laplacian_array(u.values, u.grid))


def _axis_weights(grid: GridSpec, t: float):
    """Left index and weight for linear interpolation at x/t along one axis.

    Indices -1 and n address the virtual zero nodes outside the box.
    """
    s = grid.axis / t
    pos = (s + grid.L / 2) / grid.h - 0.5
    outside = (pos < -0.5) | (pos > grid.n - 0.5)
    i0 = np.clip(np.floor(pos).astype(np.int64), -1, grid.n - 1)
    w1 = pos - i0
    w1 = np.where(outside, 0.0, w1)
    w0 = np.where(outside, 0.0, 1.0 - w1)
    return i0, w0, w1


def dilate_array(vals: np.ndarray, grid: GridSpec, t: float) -> np.ndarray:
    if t == 1.0:
        return vals
    i0, w0, w1 = _axis_weights(grid, t)
    out = vals
    for ax in range(grid.dim):
        pad = [(0, 0)] * grid.dim
        pad[ax] = (1, 1)
        padded = np.pad(out, pad)
        shape = [1] * grid.dim
        shape[ax] = grid.n
        a = np.take(padded, i0 + 1, axis=ax)
        b = np.take(padded, i0 + 2, axis=ax)
        out = w0.reshape(shape) * a + w1.reshape(shape) * b
    return out


def dilate(u: Field, t: float) -> Field:
    """``u_t(x) = u(x/t)`` by multilinear interpolation with zero extension."""
    if not (math.isfinite(t) and t > 0):
        raise ValueError(f"dilation factor must be positive and finite, got {t}")
    if t == 1.0:
        return u
    return Field(u.grid, dilate_array(u.values, u.grid, t))


def tail_mass_fraction(u: Field) -> float:
    """Fraction of ``||u||_2^2`` carried by nodes in the outer 10% shell."""
    g = u.grid
    cmax = np.zeros(g.shape)
    for c in g.coords():
        cmax = np.maximum(cmax, np.abs(c))
    mask = cmax >= (1 - TAIL_SHELL) * g.L / 2
    u2 = u.values**2
    total = float(np.sum(u2))
    if total == 0.0:
        return 0.0
    return float(np.sum(u2[mask]) / total)


def check_tail(u: Field, tol: float = TAIL_TOL) -> float:
    frac = tail_mass_fraction(u)
    if frac >= tol:
        warnings.warn(
            f"{frac:.3e} of the L2 mass lies in the outer shell of the box; "
            "increase L (truncation error may dominate)",
            RuntimeWarning,
            stacklevel=2,
        )
    return frac


def dump_field(u: Field, path: str | Path) -> tuple[Path, Path]:
    """Write raw little-endian float64 values and a JSON sidecar."""
    path = Path(path)
    data = np.ascontiguousarray(u.values, dtype="<f8")
    path.write_bytes(data.tobytes(order="C"))
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(u.grid.sidecar(), indent=2, sort_keys=True) + "\n")
    return path, side


def load_field(path: str | Path) -> Field:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    if meta.get("offset") != "half-cell" or meta.get("order") != "row-major":
        raise ValueError(f"unsupported field layout in {path}: {meta}")
    grid = make_grid(meta["dim"], meta["L"], meta["n"])
    vals = np.frombuffer(path.read_bytes(), dtype="<f8").astype(np.float64)
    return Field(grid, vals.reshape(grid.shape))
