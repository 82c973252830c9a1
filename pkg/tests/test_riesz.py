import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from choquard.grid import Field, inner, make_grid
from choquard.riesz import (
    bessel_moment, kernel_on_offsets, origin_cell_value, plan_riesz, riesz_constant, riesz_convolve,
    riesz_convolve_direct, riesz_energy, truncated_kernel_transform, unit_ball_volume,
)


def newton_gaussian(r):
    return math.sqrt(math.pi) / 4 * erf(r) / r


def test_riesz_constant_closed_forms():
    assert riesz_constant(2, 3) == pytest.approx(1 / (4 * math.pi), rel=1e-15)
    assert riesz_constant(1, 3) == pytest.approx(1 / (2 * math.pi**2), rel=1e-15)
    assert riesz_constant(0.7, 2) > 0


@pytest.mark.parametrize("alpha,N", [(3.0, 3), (0.0, 3), (-1.0, 2), (3.5, 3), (math.nan, 3)])
def test_riesz_constant_rejects(alpha, N):
    with pytest.raises(ValueError):
        riesz_constant(alpha, N)


def test_origin_cell_value_formula():
    h, A = 0.25, riesz_constant(2, 3)
    w3 = 4 * math.pi / 3
    rc = (h**3 / w3) ** (1 / 3)
    assert unit_ball_volume(3) == pytest.approx(w3, rel=1e-15)
    assert origin_cell_value(2, 3, h) == pytest.approx(A * 3 * w3 * rc**2 / (2 * h**3), rel=1e-14)


@pytest.mark.parametrize("method", ["truncated", "sampled"])
def test_plan_shape_and_symmetry(method):
    g = make_grid(3, 16.0, 64)
    plan = plan_riesz(g, 2.0, method=method)
    assert plan.padded_shape == (128, 128, 128)
    assert plan.multiplier.shape == (128, 128, 65)
    assert np.all(np.isfinite(plan.multiplier))
    assert plan.riesz_A > 0 and plan.pad == 2 and plan.r_trunc == pytest.approx(16 * math.sqrt(3))
    m = plan.multiplier
    for ax in range(2):
        assert np.array_equal(m, np.roll(np.flip(m, axis=ax), 1, axis=ax))


def test_plan_memory_cap_and_alpha():
    g = make_grid(3, 16.0, 64)
    with pytest.raises(ValueError):
        plan_riesz(g, 2.0, max_padded=100**3)
    with pytest.raises(ValueError):
        plan_riesz(g, 3.0)


def test_bessel_moment_series_and_quadrature_agree():
    # The series branch ends at z = 2; both branches must join continuously.
    for N, alpha in [(2, 0.5), (3, 2.0), (4, 1.3)]:
        lo = bessel_moment(np.array([2.0 - 1e-9]), N, alpha)[0]
        hi = bessel_moment(np.array([2.0 + 1e-9]), N, alpha)[0]
        assert lo == pytest.approx(hi, rel=1e-8)


def test_truncated_transform_coulomb_closed_form():
    # N=3, alpha=2: int_{|x|<R} e^{-ik.x} / (4 pi |x|) dx = (1 - cos kR) / k^2.
    k = np.linspace(0.1, 20, 50)
    R = 7.0
    got = truncated_kernel_transform(k, 2.0, 3, R)
    expect = (1 - np.cos(k * R)) / k**2
    assert np.max(np.abs(got - expect)) < 1e-12


def test_riesz_zero_field():
    g = make_grid(3, 4.0, 8)
    plan = plan_riesz(g, 2.0)
    assert np.all(riesz_convolve(plan, Field.zeros(g)).values == 0)


@pytest.mark.parametrize("method", ["truncated", "sampled"])
def test_fft_matches_direct(method, rng):
    g = make_grid(3, 4.0, 8)
    plan = plan_riesz(g, 1.3, method=method)
    for _ in range(5):
        u = Field(g, rng.standard_normal(g.shape))
        fast = riesz_convolve(plan, u).values
        slow = riesz_convolve_direct(g, 1.3, u, method=method).values
        assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


@pytest.mark.parametrize("method", ["truncated", "sampled"])
def test_delta_gives_kernel_column(method):
    g = make_grid(3, 4.0, 8)
    delta = np.zeros(g.shape)
    delta[3, 4, 5] = 1 / g.cell_volume
    out = riesz_convolve_direct(g, 2.0, Field(g, delta), method=method).values
    table = kernel_on_offsets(g, 2.0, method)
    i = np.arange(8)
    expect = table[np.ix_((i - 3) % 16, (i - 4) % 16, (i - 5) % 16)]
    assert np.allclose(out, expect, rtol=1e-14, atol=0)
    fast = riesz_convolve(plan_riesz(g, 2.0, method=method), Field(g, delta)).values
    assert np.max(np.abs(fast - expect)) <= 1e-12 * np.max(expect)


def test_direct_linearity_and_guard(rng):
    g = make_grid(3, 4.0, 8)
    u = rng.standard_normal(g.shape)
    b = riesz_convolve_direct(g, 2.0, Field(g, u)).values
    # scaling by a power of two is exact in floating point
    assert np.array_equal(riesz_convolve_direct(g, 2.0, Field(g, 4.0 * u)).values, 4.0 * b)
    a = riesz_convolve_direct(g, 2.0, Field(g, 2.5 * u)).values
    assert np.max(np.abs(a - 2.5 * b)) <= 1e-14 * np.max(np.abs(a))
    with pytest.raises(ValueError):
        riesz_convolve_direct(make_grid(3, 4.0, 18), 2.0, Field.zeros(make_grid(3, 4.0, 18)))


def test_grid_mismatch():
    plan = plan_riesz(make_grid(3, 4.0, 8), 2.0)
    with pytest.raises(ValueError):
        riesz_convolve(plan, Field.zeros(make_grid(3, 5.0, 8)))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_symmetry_and_positivity(seed):
    g = make_grid(3, 6.0, 12)
    plan = plan_riesz(g, 1.7)
    r = np.random.default_rng(seed)
    u, w = r.standard_normal(g.shape), r.standard_normal(g.shape)
    ku = riesz_convolve(plan, Field(g, u)).values
    kw = riesz_convolve(plan, Field(g, w)).values
    assert inner(ku, w, g) == pytest.approx(inner(u, kw, g), rel=1e-12, abs=1e-12 * np.abs(ku).max())
    scale = inner(np.abs(ku), np.abs(u), g)
    assert riesz_energy(plan, u) >= -1e-10 * scale


def test_gaussian_newton_potential_near_origin():
    g = make_grid(3, 16.0, 64)
    plan = plan_riesz(g, 2.0)
    phi = riesz_convolve(plan, Field(g, np.exp(-g.r2))).values
    i = g.n // 2
    # The nearest node sits at |x| = sqrt(3) h / 2, not at the origin.
    r0 = math.sqrt(3) * g.h / 2
    assert phi[i, i, i] == pytest.approx(newton_gaussian(r0), abs=1e-10)
    assert abs(phi[i, i, i] - 0.5) <= 0.5 - newton_gaussian(r0) + 1e-10


@pytest.mark.parametrize("method", ["truncated", "sampled"])
def test_newton_potential_converges_under_refinement(method):
    errs = []
    for n in (16, 32, 64):
        g = make_grid(3, 16.0, n)
        plan = plan_riesz(g, 2.0, method=method)
        phi = riesz_convolve(plan, Field(g, np.exp(-g.r2))).values
        r = np.sqrt(g.r2)
        errs.append(np.max(np.abs(phi - math.sqrt(math.pi) / 4 * erf(r) / r)))
    # observed order >= 1 between consecutive refinements
    assert errs[1] <= errs[0] / 1.9 and errs[2] <= errs[1] / 1.9
    assert errs[2] < 2e-3
