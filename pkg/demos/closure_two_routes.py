"""Convex closure of a double-well function, computed two ways.

The discrete double conjugate and the barycentric LP agree on the grid;
the LP additionally returns the measure that attains the value.
"""

import numpy as np

from convex_closure import biconjugate, default_slope_grid, envelope_via_measures, tol_equiv
from convex_closure import fixtures as fx
from convex_closure.envelopes import envelope_on_grid, lipschitz_estimate

f = fx.w_shape(fx.interval(64))
S = default_slope_grid(f)
closure = biconjugate(f, S)
lp = envelope_on_grid(f)

print("x      f(x)     closure   LP")
for x in (0.0, 0.125, 0.25, 0.5, 0.75, 1.0):
    i = f.domain.grid_index([x])
    print(f"{x:<6} {f.values[i]:<8.5f} {closure.values[i]:<9.5f} {lp[i]:.5f}")

# the flat bottom between the wells is filled by a two-point mixture
res = envelope_via_measures(f, [0.5])
print("\nminimizing measure at x=0.5:")
for p, w in zip(res.measure.support[:, 0], res.measure.weights):
    print(f"  {w:.3f} at {p}")

gap = np.max(np.abs(closure.values - lp))
tol = tol_equiv(f.domain.h, lipschitz_estimate(f), S.step, f.domain.diameter(1))
print(f"\nmax route gap {gap:.2e}, allowed {tol:.2e}")

# a 2D example: the routes still agree up to the slope-grid resolution
g = fx.random_piecewise_linear(fx.triangle(16), np.random.default_rng(3))
S2 = default_slope_grid(g)
gap2 = np.max(np.abs(biconjugate(g, S2).values - envelope_on_grid(g)))
tol2 = tol_equiv(g.domain.h, lipschitz_estimate(g), S2.step, g.domain.diameter(1))
print(f"triangle, {len(g.domain.grid)} nodes: gap {gap2:.3e}, allowed {tol2:.3e}")
