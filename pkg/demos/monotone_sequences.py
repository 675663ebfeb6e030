"""Envelopes along increasing and decreasing sequences of functions.

Each harness reports, at every probe, the gap between the envelope of the
limit and that of the n-th term.
"""

import numpy as np

from convex_closure import run_convergence_harness, run_decreasing_harness
from convex_closure.sequences import pasch_hausdorff_ladder
from convex_closure import fixtures as fx

rng = np.random.default_rng(1)


def show(name, rep):
    col = rep.gaps.max(axis=1)
    head = ", ".join(f"{g:.2e}" for g in col[:4])
    print(f"{name:<22} gaps {head} ... {col[-1]:.2e}  [{rep.verdict}]")


show("shift of W-shape", run_convergence_harness(fx.shifted()))
ladder = pasch_hausdorff_ladder(fx.w_shape(fx.interval(32)), [0.05, 0.1, 0.2, 0.4, 0.8])
show("Pasch-Hausdorff", run_convergence_harness(ladder))
show("vicinity cutoffs", run_convergence_harness(fx.cutoff_square_sequence()))

# lsc terms: the +inf set grows to that of the limit
f0 = fx.indicator_like(fx.square(10), rng)
seq = fx.growing_indicator_sequence(f0)
show("growing +inf set", run_convergence_harness(seq))
probes = f0.domain.grid[f0.finite_mask][:4] + 0.013
show("  same, hull kind", run_convergence_harness(seq, "hull", probes))

w = fx.w_shape(fx.interval(32))
show("moving kink (down)", run_decreasing_harness(fx.moving_kink_sequence(w)))
rep = run_decreasing_harness(fx.falling_floor_sequence(fx.concave_chord(fx.interval(32)), 3.0))
show("falling floor (down)", rep)
print("monotonicity violations:", rep.monotonicity_violations)
