"""Exact LP oracle vs the level-set solver.

Atoms sampled from the continuous model are matched exactly by a
transportation simplex.  The LP shares nothing with the level-set pipeline
beyond the surplus evaluator, so agreement of objectives (surplus gap) and
potentials (dual gap after the free additive shift) is a genuine
cross-check.  The audit confirms no cyclic reassignment of matched pairs
can raise the sampled surplus.
"""

import numpy as np

from nestor import (build, compare_with_map, cyclical_monotonicity_audit,
                    sample_instance, solve_split_curve, solve_transport)

scenario = build("paraboloid-segment", m=2)
model = scenario.model
curve = solve_split_curve(model)

print("paraboloid fixture, target atoms fixed at 40:")
print("  atoms   surplus_gap   dual_gap   pivots   worst_cycle_gain")
for n_source in (100, 400, 1600):
    inst = sample_instance(model, n_source, 40, seed=7)
    plan = solve_transport(inst)
    gaps = compare_with_map(model, curve, inst, plan)
    audit = cyclical_monotonicity_audit(plan, inst.surplus_matrix)
    dual_obj = plan.u @ inst.source_weights + plan.v @ inst.target_weights
    assert abs(plan.objective - dual_obj) < 1e-9  # strong duality
    print(f"  {n_source:5d}   {gaps['surplus_gap']:+.2e}    "
          f"{gaps['dual_gap']:.2e}   {plan.n_pivots:5d}   {audit:+.2e}")

print("\nshuffled-atom stress (forces pivoting), 200 x 50 random surplus:")
rng = np.random.default_rng(0)
from nestor import DiscreteInstance
a = rng.random(200) + 0.01
a /= a.sum()
b = rng.random(50) + 0.01
b /= b.sum()
s_mat = rng.standard_normal((200, 50))
plan = solve_transport(DiscreteInstance(np.zeros((200, 1)), a,
                                        np.zeros(50), b, s_mat))
slack = np.max(s_mat - plan.u[:, None] - plan.v[None, :])
print(f"  objective={plan.objective:.6f}  pivots={plan.n_pivots}")
print(f"  duality gap       = {abs(plan.objective - plan.u @ a - plan.v @ b):.1e}")
print(f"  feasibility slack = {slack:.1e}")
print(f"  support size      = {plan.rows.size} <= {200 + 50 - 1}")
