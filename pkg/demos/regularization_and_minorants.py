"""Lipschitz regularization from below, and affine minorants of a closure."""

import numpy as np

from convex_closure import affine_minorant, envelope_via_measures, pasch_hausdorff
from convex_closure import fixtures as fx
from convex_closure.sequences import grid_lipschitz

rng = np.random.default_rng(4)
f = fx.random_convex(fx.interval(40), rng)
L = grid_lipschitz(f)
print(f"grid Lipschitz constant of f: {L:.3f}")
for n in (0.5, 1, 2, 4, 8, 16):
    r = pasch_hausdorff(f, n)
    print(f"n={n:<4} max(f - f_n) = {np.max(f.values - r.values):.4f}, "
          f"Lipschitz {grid_lipschitz(r):.3f}")
print("equal to f once n >= L:", np.array_equal(pasch_hausdorff(f, L).values, f.values))

# affine minorants approaching the closure of an lsc function with +inf nodes
g = fx.indicator_like(fx.square(12), rng)
x0 = np.array([0.31, 0.52])
ref = envelope_via_measures(g, x0).value
for Delta in (0.1, 0.01, 1e-6):
    a = affine_minorant(g, x0, Delta, reference=ref, dual_fallback=True)
    print(f"Delta={Delta:<6} closure {ref:.6f}, alpha(x0) {a(x0):.6f}, slope {np.round(a.slope, 3)}")
