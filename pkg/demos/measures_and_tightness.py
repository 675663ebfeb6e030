"""Barycenters, support reduction and the vicinity test for tightness."""

import numpy as np

from convex_closure import (FiniteMeasure, barycenter, caratheodory_reduce,
                            compose_tight_compact, tightness_check)
from convex_closure import fixtures as fx

dom = fx.square(8)
rng = np.random.default_rng(0)

mu = FiniteMeasure(dom, rng.random((10, 2)), rng.dirichlet(np.ones(10)))
red = caratheodory_reduce(mu)
print(f"{len(mu)} atoms -> {len(red)} atoms")
print("barycenter before", barycenter(mu), "after", barycenter(red))

# A family supported on a fixed finite set passes at every scale.
fam, K0 = fx.tight_family(dom)
for eps in (0.1, 0.01):
    for delta in (0.1, 0.01):
        print(f"eps={eps:<5} delta={delta:<5} tight: {tightness_check(fam, eps, delta, K0).passed}")

# Diracs at the basis vectors of R^20 all sit at distance 1 from the origin.
_, basis, origin = fx.basis_family()
rep = tightness_check(basis, 0.1, 0.5, origin)
print(f"\nbasis family: passed={rep.passed}, {len(rep.offenders)} offenders")
rep = tightness_check(basis, 0.1, 0.5, origin, exempt=range(20))
print(f"after exempting every member (a finite family): passed={rep.passed}")

# Composing one set from per-scale sets: the escaped masses sum below eps.
fam, provider = fx.escaping_pair(dom, eps=0.1)
res = compose_tight_compact(fam, 0.1, provider)
print(f"\ncomposed set has {len(res.subset)} nodes; mass outside {res.outside_mass[0]:.3f}"
      f" < bound {res.bound:.6f} < eps 0.1")
print("provider set at a coarse scale:", provider(0.05, 0.05).indices,
      "| fine scale:", provider(1e-4, 1e-4).indices)
