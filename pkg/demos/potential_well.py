"""A potential well below its limit at infinity lowers the ground state energy.

V(x) = 3 - 1/(1+|x|^2) stays below V_inf = 3, so the least energy of the
problem with V sits below the least energy of the problem with V = 3.  The
lambda family of the limit problem is non-increasing in lambda, and the energy
along the dilation path of the lambda = 1 limit solution, measured with V,
stays below the limit energy.
"""

from dataclasses import replace

from choquard.experiments import sweep_lambda
from choquard.models import check_assumptions, make_nonlinearity, make_potential
from choquard.solver import SolveConfig, solve_autonomous, solve_ground_state

well = {"variant": "remark14_i", "a": 3.0, "b": 1.0}
cfg = SolveConfig(L=16.0, n=32, potential=well)

# The sampled assumption checks for this potential and the Pekar nonlinearity.
report = check_assumptions(make_potential("remark14_i", 3, 2.0, a=3, b=1), make_nonlinearity("pekar"), 3, 2.0)
for name, v in report.verdicts.items():
    print(f"{name}: {v.status:15s} worst margin {v.margin}")

m = solve_ground_state(cfg)
m_inf = solve_autonomous(cfg)
print(f"\nm with the well      {m.m:.8f} (converged {m.converged})")
print(f"m with V = V_inf = 3 {m_inf.m:.8f} (converged {m_inf.converged})")
print(f"gap                  {m_inf.m - m.m:.6f}")

# The limit problem along lambda, with the path bound from the lambda = 1 solution.
sw = sweep_lambda(cfg, [0.5, 0.625, 0.75, 0.875, 1.0])
print("\nlambda   m_lambda^inf    path bound    margin")
for lam, mt in zip(sw.values, sw.metrics):
    print(f"{lam:6.3f}  {mt['m_inf']:12.6f}  {mt['bound']:12.6f}  {mt['margin']:9.4f}")
print("monotone:", sw.verdicts["monotone_nonincreasing"])

# A second, wider starting Gaussian lands on the same energy.
alt = solve_ground_state(replace(cfg, widths=(1.5, 3.0)))
print(f"\nbest of two starting widths: m = {alt.m:.8f} from start {alt.start_index}")
