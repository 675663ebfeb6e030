"""Finitely supported probability measures on a convex domain.

Covers barycenters, integration of (grid) functions, support reduction that
keeps the barycenter fixed, and the vicinity form of the tightness criterion
for families of measures.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import (CompactSubset, ConvexDomain, GeometryError,
                       contains, distance_to_set)

__all__ = [
    "MeasureError",
    "FiniteMeasure",
    "MeasureFamily",
    "TightnessReport",
    "TightCompact",
    "barycenter",
    "integrate",
    "mixture",
    "caratheodory_reduce",
    "vicinity_mass",
    "tightness_check",
    "compose_tight_compact",
    "measure_from_dict",
    "measure_to_dict",
]

PRUNE_TOL = 1e-15
MASS_TOL = 1e-12


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Probability measure ``sum_i weights[i] * delta(support[i])``.

    Weights below ``PRUNE_TOL`` are dropped and the rest renormalized.
    """

    domain: ConvexDomain
    support: np.ndarray
    weights: np.ndarray
    check_support: bool = field(default=True, repr=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.support, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if X.shape[0] == 0 or X.shape[0] != w.size:
            raise MeasureError("support and weights must be nonempty and of equal length")
        if X.shape[1] != self.domain.dimension:
            raise MeasureError("support dimension does not match the domain")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise MeasureError(f"weights sum to {w.sum()!r}, not 1")
        keep = w >= PRUNE_TOL
        X, w = X[keep], w[keep]
        w = w / w.sum()
        if self.check_support:
            for x in X:
                if not contains(self.domain, x):
                    raise MeasureError(f"support point {x.tolist()} lies outside the domain")
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", X)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, domain, x):
        return cls(domain, [np.asarray(x, dtype=float)], [1.0])

    @classmethod
    def from_grid(cls, domain, indices, weights):
        return cls(domain, domain.grid[list(indices)], weights, check_support=False)

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class MeasureFamily:
    measures: tuple[FiniteMeasure, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        ms = tuple(self.measures)
        if ms and any(m.domain is not ms[0].domain for m in ms):
            raise MeasureError("all measures in a family must share one domain")
        if self.labels is not None and len(self.labels) != len(ms):
            raise MeasureError("labels and measures differ in length")
        object.__setattr__(self, "measures", ms)

    @property
    def domain(self):
        return self.measures[0].domain

    def __len__(self):
        return len(self.measures)

    def __iter__(self):
        return iter(self.measures)

    def __getitem__(self, i):
        return self.measures[i]

    def label(self, i):
        return str(i) if self.labels is None else self.labels[i]


def barycenter(mu: FiniteMeasure) -> np.ndarray:
    """Weighted mean of the support points."""
    return mu.weights @ mu.support


def integrate(mu: FiniteMeasure, f: Callable) -> float:
    """``sum_i w_i f(x_i)``; +inf as soon as a charged atom has f = +inf.

    ``f`` is any callable on points, e.g. a :class:`GridFunction`.
    """
    total = 0.0
    for x, w in zip(mu.support, mu.weights):
        v = f(x)
        if v is None or np.isnan(v):
            raise MeasureError(f"integrand undefined at {x.tolist()}")
        if v == np.inf:
            return np.inf
        total += float(w) * float(v)
    return total


def mixture(mu: FiniteMeasure, nu: FiniteMeasure, t: float) -> FiniteMeasure:
    """The measure ``t*mu + (1-t)*nu``."""
    if not 0 <= t <= 1:
        raise MeasureError("mixing weight must lie in [0, 1]")
    w = np.concatenate([t * mu.weights, (1 - t) * nu.weights])
    X = np.vstack([mu.support, nu.support])
    return FiniteMeasure(mu.domain, X, w / w.sum(), check_support=False)


def caratheodory_reduce(mu: FiniteMeasure) -> FiniteMeasure:
    """Same-barycenter measure supported on at most ``d + 1`` of mu's atoms.

    Repeatedly takes a null vector ``z`` of the lifted support matrix
    ``[x_i; 1]`` and moves the weights along ``-z`` until one vanishes.
    """
    d = mu.domain.dimension
    X = np.array(mu.support)
    w = np.array(mu.weights)
    while len(w) > d + 1:
        M = np.vstack([X.T, np.ones(len(w))])
        z = np.linalg.svd(M)[2][-1]
        if not np.any(z > 0):
            z = -z
        pos = np.flatnonzero(z > 0)
        ratios = w[pos] / z[pos]
        k = int(np.argmin(ratios))
        j = int(pos[k])
        w = w - ratios[k] * z
        keep = w > 0
        keep[j] = False
        X, w = X[keep], w[keep]
    return FiniteMeasure(mu.domain, X, w / w.sum(), check_support=False)


def vicinity_mass(mu: FiniteMeasure, K: CompactSubset, delta: float) -> float:
    """``mu(U_delta(K))`` for the closed delta-vicinity of ``K``."""
    if not delta > 0:
        raise GeometryError(f"delta must be positive, got {delta}")
    inside = distance_to_set(mu.support, K, mu.domain) <= delta
    return float(mu.weights[inside].sum())


@dataclass(frozen=True)
class TightnessReport:
    passed: bool
    eps: float
    delta: float
    masses: tuple[float, ...]
    offenders: tuple[int, ...]
    exempt: tuple[int, ...]

    def __bool__(self):
        return self.passed


def tightness_check(family: MeasureFamily, eps: float, delta: float, K: CompactSubset,
                    exempt: Sequence[int] = ()) -> TightnessReport:
    """Check ``mu(U_delta(K)) >= 1 - eps`` for every member not in ``exempt``."""
    if not (eps > 0 and delta > 0):
        raise MeasureError("eps and delta must be positive")
    exempt = tuple(sorted(set(int(i) for i in exempt)))
    masses = tuple(vicinity_mass(mu, K, delta) for mu in family)
    skip = set(exempt)
    offenders = tuple(i for i, m in enumerate(masses)
                      if i not in skip and m < 1.0 - eps - MASS_TOL)
    return TightnessReport(not offenders, eps, delta, masses, offenders, exempt)


@dataclass(frozen=True)
class TightCompact:
    """Grid approximation of the intersection of shrinking vicinities."""

    subset: CompactSubset | None
    eps: float
    scales: tuple[float, ...]
    escaped_per_scale: tuple[tuple[float, ...], ...]
    outside_mass: tuple[float, ...]
    bound: float

    @property
    def passed(self) -> bool:
        return all(m < self.eps for m in self.outside_mass)


def compose_tight_compact(family: MeasureFamily, eps: float,
                          K_provider: Callable[[float, float], CompactSubset],
                          n_max: int = 30) -> TightCompact:
    """Assemble one set capturing mass ``> 1 - eps`` from per-scale sets.

    For ``n = 1..n_max`` the provider supplies ``K_n`` such that every member
    charges ``U_{r_n}(K_n)`` with mass at least ``1 - r_n``, where
    ``r_n = eps * 2**-n``. The returned set is the intersection of these
    vicinities; the mass of every member outside it is bounded by the sum
    of the escaped masses, which is at most ``sum_n r_n < eps``.
    """
    if not eps > 0:
        raise MeasureError("eps must be positive")
    dom = family.domain
    scales = tuple(eps * 2.0 ** -n for n in range(1, n_max + 1))
    escaped = []
    inside_atoms = [np.ones(len(mu), dtype=bool) for mu in family]
    inside_grid = np.ones(len(dom.grid), dtype=bool)
    for n, r in enumerate(scales, start=1):
        K = K_provider(r, r)
        row = []
        for i, mu in enumerate(family):
            near = distance_to_set(mu.support, K, dom) <= r
            esc = float(mu.weights[~near].sum())
            if esc > r + MASS_TOL:
                raise MeasureError(
                    f"provider set at scale n={n} (eps'=delta'={r:.3g}) misses mass "
                    f"{esc:.3g} > {r:.3g} of measure {family.label(i)}")
            row.append(esc)
            inside_atoms[i] &= near
        escaped.append(tuple(row))
        inside_grid &= distance_to_set(dom.grid, K, dom) <= r
    outside = tuple(float(mu.weights[~ins].sum()) for mu, ins in zip(family, inside_atoms))
    idx = np.flatnonzero(inside_grid)
    subset = CompactSubset(dom, tuple(idx)) if idx.size else None
    result = TightCompact(subset, eps, scales, tuple(escaped), outside, float(sum(scales)))
    for i, (m, col) in enumerate(zip(outside, zip(*escaped))):
        if m > sum(col) + MASS_TOL:
            raise MeasureError(f"union bound violated for measure {family.label(i)}")
    if not result.passed:
        raise MeasureError(f"mass outside the composed set reaches eps={eps}")
    return result


def measure_from_dict(domain: ConvexDomain, data: dict) -> FiniteMeasure:
    try:
        return FiniteMeasure(domain, data["support"], data["weights"])
    except KeyError as exc:
        raise MeasureError(f"measure: missing field {exc.args[0]!r}") from None


def measure_to_dict(mu: FiniteMeasure) -> dict:
    return {"support": mu.support.tolist(), "weights": mu.weights.tolist()}
