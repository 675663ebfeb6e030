"""Convex closures and convex hulls of functions on compact polytopes.

Two independent routes compute the closure of a grid-sampled function (the
discrete double Fenchel transform and a barycentric linear program over
probability weights); harnesses track how these envelopes behave along
monotone sequences of functions.
"""

from .geometry import (CompactSubset, ConvexDomain, GeometryError, contains,
                       distance_to_set, in_vicinity, make_grid)
from .lp import LPError, LPResult, lp_solve
from .measures import (FiniteMeasure, MeasureError, MeasureFamily, barycenter,
                       caratheodory_reduce, compose_tight_compact, integrate,
                       tightness_check)
from .envelopes import (AffineFunction, EnvelopeError, GridFunction, SlopeGrid,
                        affine_minorant, biconjugate, convex_hull_fn, default_slope_grid,
                        envelope_via_measures, fenchel_conjugate, tol_equiv)
from .sequences import (ConvergenceReport, FunctionSequence, ProofTraceScenario,
                        SequenceError, pasch_hausdorff, proof_trace_check,
                        run_convergence_harness, run_decreasing_harness,
                        vicinity_cutoff_sequence)

__version__ = "0.1.0"
