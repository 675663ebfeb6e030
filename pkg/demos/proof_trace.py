"""Measures escaping every compact set, traced through the cutoff functions.

For each cutoff f_n a measure mu_k charging the delta-vicinity of K_n with
mass below 1 - eps is found, and the chain

    closure f_n(x_k) <= co f_n(x_k) <= mu_k(f_n) < 1 - eps

is evaluated at its barycenter x_k.
"""

from convex_closure import proof_trace_check
from convex_closure import fixtures as fx

for name, sc in fx.proof_trace_scenarios().items():
    rep = proof_trace_check(sc)
    print(f"{name}: eps={sc.eps}, delta={sc.delta}, passed={rep.passed}")
    print("   n   k  closure     co     mu_k(f_n)  margin")
    for r in rep.rows[::11]:
        print(f"  {r.n:2d}  {r.k:2d}  {r.closure:8.4f}  {r.hull:8.4f}  {r.integral:8.4f}"
              f"  {r.margin:.4f}")
    print(f"  cutoff = 1 near K_n: {rep.cutoff_inside_ok}; < 0 far away: {rep.cutoff_outside_ok}\n")
