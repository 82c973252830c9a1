import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from choquard.functionals import FiberMap, energy_breakdown
from choquard.grid import Field, dilate, gaussian
from choquard.models import make_potential
from choquard.solver import (
    FiberError, SolveConfig, autonomous_config, build_problem, fiber_maximize, mountain_pass_upper_bound,
    project_to_manifold, solve_autonomous, solve_ground_state,
)

SMALL = SolveConfig(L=16.0, n=32)
REMARK = replace(SMALL, potential={"variant": "remark14_i", "a": 3.0, "b": 1.0})


@pytest.fixture(scope="module")
def pekar_small():
    return solve_ground_state(SMALL)


@pytest.fixture(scope="module")
def remark_small():
    return solve_ground_state(REMARK)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(lam=0.4)
    with pytest.raises(ValueError):
        SolveConfig(tol_grad=0.0)
    with pytest.raises(ValueError):
        SolveConfig(L=16.0, n=32, widths=(0.9,))


def test_fiber_maximize_closed_form():
    fb = FiberMap.from_scalars(1.0, 1.0, 1.0, 1.0, 3, 2.0)
    t, z = fiber_maximize(fb)
    t_exact = math.sqrt((3 + math.sqrt(29)) / 10)
    assert t == pytest.approx(t_exact, rel=1e-10)
    assert abs(fb.dzeta(t)) <= 1e-7 * fb.scale
    assert z == pytest.approx((t_exact + t_exact**3 - t_exact**5) / 2, rel=1e-12)


def test_fiber_maximize_outside_lambda():
    with pytest.raises(FiberError, match="d <= 0"):
        fiber_maximize(FiberMap.from_scalars(1.0, 1.0, 0.0, 1.0, 3, 2.0))


def test_fiber_maximize_no_interior_maximum():
    # The maximizer t* ~ (a/d)^{1/4}... lies far above 1e3 when d is tiny.
    with pytest.raises(FiberError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fiber_maximize(FiberMap.from_scalars(1.0, 1.0, 1e-30, 1.0, 3, 2.0))


def test_projection_properties():
    pekar_problem = build_problem(SMALL)
    g = pekar_problem.grid
    u = gaussian(g, 1.0, 1.5)
    v, t, z = project_to_manifold(pekar_problem, u)
    assert 1.2 < t < 3
    br = energy_breakdown(pekar_problem, v)
    # the residual after one projection is the multilinear interpolation floor, O(h^2)
    fine = build_problem(replace(SMALL, n=64))
    vf, _, _ = project_to_manifold(fine, gaussian(fine.grid, 1.0, 1.5))
    fine_res = energy_breakdown(fine, vf).pohozaev_residual
    assert br.pohozaev_residual < 2e-2 and fine_res < br.pohozaev_residual / 3
    fb = FiberMap(pekar_problem, u)
    assert fb.dzeta(0.5 * t) > 0 > fb.dzeta(2 * t)
    # the projected field is a fixed point up to the same interpolation floor
    _, t2, _ = project_to_manifold(fine, vf)
    assert abs(t2 - 1) <= 2 * fine_res
    # the fiber maximum bounds every sampled point of the fiber
    fv = FiberMap(pekar_problem, v)
    tv, zv = fiber_maximize(fv)
    assert all(fv.zeta(s) <= zv * (1 + 1e-12) for s in np.geomspace(0.1, 10, 50))


def test_pekar_small_converges(pekar_small):
    r = pekar_small
    assert r.converged and r.in_lambda
    assert r.m == r.breakdown.I
    assert r.pohozaev_residual <= SMALL.tol_poh and r.gradient_residual <= SMALL.tol_grad
    assert r.m == pytest.approx(29.357917519081937, rel=1e-9)
    energies = [row[1] for row in r.trace]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert r.m >= 1e-8
    a = r.breakdown.a
    assert math.sqrt(a + r.breakdown.l2sq) >= 1e-4
    assert len(r.t_history) == r.iterations + 1


def test_projection_of_solution_is_identity(pekar_small):
    problem = build_problem(SMALL)
    v, t, z = project_to_manifold(problem, pekar_small.field)
    assert t == pytest.approx(1.0, abs=1e-8)
    assert z == pytest.approx(pekar_small.m, rel=1e-12)
    assert np.max(np.abs(v.values - pekar_small.field.values)) <= 1e-6 * np.max(pekar_small.field.values)


def test_zero_iteration_probe(pekar_small):
    probe = solve_ground_state(replace(SMALL, max_iter=0))
    assert probe.iterations == 0 and not probe.converged
    assert probe.m >= pekar_small.m


def test_determinism(pekar_small):
    again = solve_ground_state(SMALL)
    assert again.m == pekar_small.m
    assert np.array_equal(again.field.values, pekar_small.field.values)


def test_multistart_reports_best():
    r = solve_ground_state(replace(SMALL, widths=(1.5, 3.0), max_iter=3))
    singles = [solve_ground_state(replace(SMALL, widths=(w,), max_iter=3)).m for w in (1.5, 3.0)]
    assert r.m == min(singles)
    assert r.start_index == int(np.argmin(singles))


def test_remark_below_autonomous(remark_small):
    auto = solve_autonomous(REMARK)
    assert remark_small.converged and auto.converged
    assert remark_small.m <= auto.m + 1e-6


def test_autonomous_config_uses_limit():
    cfg = autonomous_config(REMARK)
    assert cfg.potential == {"variant": "constant", "Vinf": 3.0}


def test_lambda_monotone_pair():
    m_half = solve_ground_state(replace(SMALL, lam=0.5)).m
    m_one = solve_ground_state(SMALL).m
    assert m_half >= m_one - 1e-6
    # exact scaling for the homogeneous Pekar problem: m_lambda = m_1 / lambda
    assert m_half == pytest.approx(2 * m_one, rel=1e-7)


@pytest.mark.slow
def test_translation_invariance_of_autonomous_energy():
    cfg = SolveConfig(L=32.0, n=48)
    h = cfg.L / cfg.n
    r0 = solve_ground_state(cfg)
    r1 = solve_ground_state(replace(cfg, center=(2 * h, -h, 0.0)))
    assert r0.converged and r1.converged
    assert r1.m == pytest.approx(r0.m, rel=1e-8)


def test_mountain_pass_bound_constant_equals_m(pekar_small):
    problem = build_problem(SMALL)
    pb = mountain_pass_upper_bound(pekar_small, 1.0, problem)
    assert pb.bound == pytest.approx(pekar_small.m, rel=1e-6)
    assert pb.T >= 1


def test_mountain_pass_bound_below_for_smaller_potential(pekar_small):
    # V = 1 - 0.5/(1+|x|^2) <= 1 pointwise
    pspec = make_potential("remark14_i", 3, 2.0, a=1.0, b=0.5)
    problem = build_problem(SMALL, pspec)
    pb = mountain_pass_upper_bound(pekar_small, 1.0, problem)
    assert pb.bound <= pekar_small.m + 1e-8


def test_mountain_pass_requires_converged(pekar_small):
    bad = replace(pekar_small, converged=False)
    with pytest.raises(ValueError):
        mountain_pass_upper_bound(bad, 1.0, build_problem(SMALL))
    with pytest.raises(ValueError):
        mountain_pass_upper_bound(pekar_small, 0.3, build_problem(SMALL))


def test_initial_field_from_file(tmp_path, pekar_small):
    from choquard.grid import dump_field

    path, _ = dump_field(pekar_small.field, tmp_path / "start.field")
    r = solve_ground_state(replace(SMALL, init_field=str(path)))
    assert r.converged
    assert r.m == pytest.approx(pekar_small.m, rel=1e-9)
    assert r.iterations <= 3
