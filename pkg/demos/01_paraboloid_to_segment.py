"""Solid paraboloid onto a segment: the flagship solvable fixture.

The region {x2^2/2 < x1 < 1} with uniform mass is matched against the
uniform segment (0, 1) under the inner-product surplus s = x1 y.  Every
object has a closed form: the split curve k(y) = y^(2/3), the map
F(x) = x1^(3/2), and the potentials v = (3/5) y^(5/3), u = (2/5) x1^(5/2).
This script solves numerically and prints the regression against them.
"""

import numpy as np

from nestor import (balance_residual, build, optimal_map,
                    pushforward_distance, solve_split_curve, source_payoff)

scenario = build("paraboloid-segment", m=2)
model = scenario.model
print(f"domain: solid paraboloid, {model.grid.n_points} interior points "
      f"({model.quadrature.resolution}/axis)")

curve = solve_split_curve(model)
mask = (curve.y_grid > 0.02) & (curve.y_grid < 0.98)

print("\nsplit curve vs k(y) = y^(2/3)")
print("  max |k_num - k|      :",
      f"{np.max(np.abs(curve.k_plus - curve.y_grid ** (2 / 3))[mask]):.2e}")
print("  max |k' - (2/3)y^-1/3|:",
      f"{np.max(np.abs(curve.kprime - (2/3) * curve.y_grid ** (-1/3))[mask]):.2e}")

v_ref = 0.6 * curve.y_grid ** (5 / 3)
shift = np.mean((curve.v_values - v_ref)[mask])
print("  max |v - (3/5)y^(5/3)|:",
      f"{np.max(np.abs(curve.v_values - v_ref - shift)[mask]):.2e} (after shift)")

probes = model.domain.sample_interior(500, seed=1, margin=0.01)
f_num = optimal_map(model, curve, probes)
print("\noptimal map vs F(x) = x1^(3/2)")
print("  max |F_num - F|      :",
      f"{np.max(np.abs(f_num - probes[:, 0] ** 1.5)):.2e} over 500 probes")

u_num, argmax = source_payoff(model, curve, probes[:100])
print("  max |u - (2/5)x1^(5/2)|:",
      f"{np.max(np.abs(u_num - 0.4 * probes[:100, 0] ** 2.5)):.2e}")
print("  max |argmax - F|     :",
      f"{np.max(np.abs(argmax - f_num[:100])):.2e} (envelope consistency)")

print("\nglobal diagnostics")
print("  pushforward KS distance:", f"{pushforward_distance(model, curve):.2e}")
sample = curve.y_grid[mask][::16]
res = max(abs(balance_residual(model, curve, float(y))) for y in sample)
print("  worst mass-balance residual:", f"{res:.2e}")

print("\nsample of the solved table (y, k, k', v):")
for i in range(16, curve.y_grid.size, 48):
    print(f"  y={curve.y_grid[i]:.4f}  k={curve.k_plus[i]:.6f}  "
          f"k'={curve.kprime[i]:.4f}  v={curve.v_values[i]:.6f}")
