"""Canonical domains, functions, sequences and scenarios.

These are the inputs shipped for the command line (``--fixture <name>``),
the demo scripts and the acceptance suite.
"""

import numpy as np

from .envelopes import GridFunction
from .geometry import CompactSubset, ConvexDomain, make_grid
from .measures import FiniteMeasure, MeasureFamily
from .sequences import (FunctionSequence, ProofTraceScenario, pasch_hausdorff_ladder,
                        shift_sequence, vicinity_cutoff_sequence)

UNIT_INTERVAL = [[0.0], [1.0]]
UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
TRIANGLE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]


def interval(resolution=64, a=0.0, b=1.0):
    return make_grid([[a], [b]], resolution)


def square(resolution=24, metric_p=2.0):
    return make_grid(UNIT_SQUARE, resolution, metric_p)


def triangle(resolution=24, metric_p=2.0):
    return make_grid(TRIANGLE, resolution, metric_p)


def w_shape(domain=None) -> GridFunction:
    """``min((x - 1/4)^2, (x - 3/4)^2)`` on [0, 1]."""
    dom = interval(64) if domain is None else domain
    return GridFunction.from_callable(
        dom, lambda x: min((x[0] - 0.25) ** 2, (x[0] - 0.75) ** 2))


def concave_chord(domain=None) -> GridFunction:
    """``x (1 - x)``: concave, zero at both endpoints, closure identically 0."""
    dom = interval(64) if domain is None else domain
    return GridFunction.from_callable(dom, lambda x: x[0] * (1.0 - x[0]))


def random_piecewise_linear(domain, rng, n_kinks=4) -> GridFunction:
    """Continuous piecewise-linear ``a.x + sum_i c_i |<u_i, x> - b_i|``."""
    d = domain.dimension
    lo, hi = domain.bounding_box
    a = rng.normal(size=d)
    u = rng.normal(size=(n_kinks, d))
    c = rng.normal(size=n_kinks)
    pts = lo + rng.random((n_kinks, d)) * (hi - lo)
    b = np.einsum("ij,ij->i", u, pts)

    def fn(x):
        x = np.asarray(x, float)
        return float(x @ a + np.abs(u @ x - b) @ c)

    return GridFunction.from_callable(domain, fn)


def random_convex(domain, rng, class_tag="lsc_lower_bounded") -> GridFunction:
    """Max of a few random affine functions plus a quadratic bowl."""
    d = domain.dimension
    A = rng.normal(size=(3, d))
    b = rng.normal(size=3)
    center = domain.vertices.mean(axis=0) + 0.2 * rng.normal(size=d)
    q = rng.uniform(0.0, 2.0)

    def fn(x):
        x = np.asarray(x, float)
        return float(np.max(A @ x + b) + q * np.sum((x - center) ** 2))

    return GridFunction.from_callable(domain, fn, class_tag)


def indicator_like(domain, rng=None, keep=None) -> GridFunction:
    """A random PL function restricted to a half-space; +inf outside it.

    ``keep`` is a boolean mask over the grid; by default the nodes with
    ``x_0 <= 0.6 * (box extent)`` are kept.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    base = random_piecewise_linear(domain, rng)
    if keep is None:
        lo, hi = domain.bounding_box
        keep = domain.grid[:, 0] <= lo[0] + 0.6 * (hi[0] - lo[0])
    vals = np.where(keep, base.values, np.inf)
    return GridFunction(domain, vals, "lsc_lower_bounded")


def dyadic_offsets(n_terms=25):
    return [2.0 ** -n for n in range(n_terms)]


def constant_sequence(domain=None, value=1.0, n_terms=5) -> FunctionSequence:
    dom = interval(16) if domain is None else domain
    f0 = GridFunction(dom, np.full(len(dom.grid), value))
    return FunctionSequence(tuple(f0 for _ in range(n_terms)), f0, "increasing")


def growing_indicator_sequence(f0: GridFunction, n_grow=4, n_terms=25) -> FunctionSequence:
    """Increasing lsc sequence whose +inf set grows to that of ``f0``.

    Term ``n`` is ``f0 - 2**-n`` on the finite nodes of ``f0``; the +inf
    nodes of ``f0`` are switched on in ``n_grow`` batches (earlier terms take
    a finite value there), after which the +inf set is frozen.
    """
    dom = f0.domain
    inf_nodes = np.flatnonzero(~f0.finite_mask)
    batches = np.array_split(inf_nodes, n_grow) if inf_nodes.size else []
    fin_vals = f0.values[f0.finite_mask]
    floor = (fin_vals.min() if fin_vals.size else 0.0) - 1.0
    terms = []
    for n, c in enumerate(dyadic_offsets(n_terms)):
        v = np.where(f0.finite_mask, f0.values - c, floor - 1.0 / (n + 1))
        for b in batches[:n]:
            v[b] = np.inf
        terms.append(GridFunction(dom, v, "lsc_lower_bounded"))
    return FunctionSequence(tuple(terms), f0, "increasing")


def moving_kink_sequence(f0: GridFunction, slope=2.0, n_terms=12) -> FunctionSequence:
    """Decreasing ``f0 + slope * max(0, x_0 - t_n)`` with ``t_n`` moving to the right end."""
    dom = f0.domain
    lo, hi = dom.bounding_box
    ts = np.linspace(lo[0], hi[0], n_terms)
    terms = tuple(f0.with_values(f0.values + slope * np.maximum(0.0, dom.grid[:, 0] - t))
                  for t in ts)
    return FunctionSequence(terms, f0, "decreasing")


def falling_floor_sequence(f0: GridFunction, top=None, n_terms=None) -> FunctionSequence:
    """Decreasing ``max(f0, c - n)``; equals ``f0`` once ``c - n <= min f0``."""
    top = float(f0.values.max()) + 1.0 if top is None else top
    n_terms = n_terms or int(np.ceil(top - f0.values.min())) + 2
    terms = tuple(f0.with_values(np.maximum(f0.values, top - n)) for n in range(n_terms))
    return FunctionSequence(terms, f0, "decreasing")


def cutoff_scenario(domain, delta=0.25, radii=None, eps=0.1) -> ProofTraceScenario:
    """Cutoff scenario with balls around the first vertex exhausting the grid."""
    origin = domain.vertices[0]
    dist = domain.distance(domain.grid, origin)
    if radii is None:
        radii = np.arange(0.0, dist.max() + delta, delta / 2)
    compacts = []
    for r in radii:
        idx = tuple(np.flatnonzero(dist <= r + 1e-12))
        compacts.append(CompactSubset(domain, idx))
    mu = FiniteMeasure.dirac(domain, origin)
    return ProofTraceScenario(domain, MeasureFamily((mu,)), eps, delta,
                              tuple(compacts), origin)


def cutoff_square_sequence(resolution=8, delta=0.25) -> FunctionSequence:
    return vicinity_cutoff_sequence(cutoff_scenario(square(resolution), delta))


def strip_domain(length=49):
    """Long thin rectangle ``[0, length] x [0, 1]`` with integer lattice."""
    V = [[0.0, 0.0], [length, 0.0], [0.0, 1.0], [length, 1.0]]
    return make_grid(V, (length, 1))


def _strip_compacts(dom, length):
    return tuple(CompactSubset(dom, tuple(np.flatnonzero(dom.grid[:, 0] <= n - 1)))
                 for n in range(1, length + 2))


def dirac_escape_scenario(length=49, eps=0.1, delta=0.5, n_terms=45) -> ProofTraceScenario:
    """Diracs at ``(k, 0)`` marching along the strip; compacts are prefixes."""
    dom = strip_domain(length)
    mus = tuple(FiniteMeasure.dirac(dom, [k, 0.0]) for k in range(length + 1))
    return ProofTraceScenario(dom, MeasureFamily(mus), eps, delta,
                              _strip_compacts(dom, length), np.zeros(2), n_terms)


def mixture_escape_scenario(length=49, eps=0.1, delta=0.5, n_terms=45) -> ProofTraceScenario:
    """``(1 - 2 eps) delta_x0 + 2 eps delta_(k, 0)`` with ``x0`` the origin."""
    dom = strip_domain(length)
    x0 = np.zeros(2)
    mus = tuple(FiniteMeasure(dom, [x0, [k, 0.0]], [1 - 2 * eps, 2 * eps])
                for k in range(1, length + 1))
    return ProofTraceScenario(dom, MeasureFamily(mus), eps, delta,
                              _strip_compacts(dom, length), x0, n_terms)


def proof_trace_scenarios():
    return {"dirac_escape": dirac_escape_scenario(),
            "mixture_escape": mixture_escape_scenario()}


def basis_family(dim=20):
    """Diracs at the standard basis vectors of R^dim, plus the origin node."""
    V = np.vstack([np.zeros(dim), np.eye(dim)])
    dom = ConvexDomain(V, 2.0)
    fam = MeasureFamily(tuple(FiniteMeasure.from_grid(dom, [k + 1], [1.0])
                              for k in range(dim)))
    return dom, fam, CompactSubset(dom, (0,))


def tight_family(domain=None, n_measures=12, atoms=4, seed=0):
    """Random measures supported on a fixed set of grid nodes ``K0``."""
    dom = square(8) if domain is None else domain
    rng = np.random.default_rng(seed)
    K0 = tuple(sorted(rng.choice(len(dom.grid), size=6, replace=False).tolist()))
    mus = []
    for _ in range(n_measures):
        idx = rng.choice(K0, size=atoms, replace=False)
        w = rng.dirichlet(np.ones(atoms))
        mus.append(FiniteMeasure.from_grid(dom, idx, w))
    return MeasureFamily(tuple(mus)), CompactSubset(dom, K0)


def escaping_pair(domain=None, eps=0.1, fraction=0.5):
    """One measure leaking mass ``fraction * eps`` to a far node.

    Returns the family and a provider that keeps only the heavy atom at
    scales where the leaked mass is admissible.
    """
    dom = square(8) if domain is None else domain
    a, b = 0, len(dom.grid) - 1
    m = fraction * eps
    fam = MeasureFamily((FiniteMeasure.from_grid(dom, [a, b], [1 - m, m]),))

    def provider(eps_n, delta_n):
        return CompactSubset(dom, (a,) if m <= eps_n else (a, b))

    return fam, provider


def pasch_ladder(f=None) -> FunctionSequence:
    f = w_shape(interval(32)) if f is None else f
    return pasch_hausdorff_ladder(f)


def shifted(f0=None, direction="increasing", n_terms=25) -> FunctionSequence:
    f0 = w_shape(interval(32)) if f0 is None else f0
    return shift_sequence(f0, dyadic_offsets(n_terms), direction)
