"""Compact convex polytopes, lp metrics, set distances and sampling grids."""

from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

from .lp import feasible

__all__ = [
    "TOL_GEOM",
    "DEFAULT_POINT_BUDGET",
    "GeometryError",
    "ConvexDomain",
    "CompactSubset",
    "lp_distance",
    "contains",
    "distance_to_set",
    "in_vicinity",
    "make_grid",
    "domain_from_dict",
    "domain_to_dict",
]

TOL_GEOM = 1e-9
DEFAULT_POINT_BUDGET = 200_000


class GeometryError(ValueError):
    pass


def lp_distance(x, y, p=2.0):
    """lp distance between ``x`` and ``y`` along the last axis (broadcasts)."""
    diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if p == 1:
        return diff.sum(axis=-1)
    if p == 2:
        return np.sqrt((diff * diff).sum(axis=-1))
    if math.isinf(p):
        return diff.max(axis=-1)
    return (diff ** p).sum(axis=-1) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    """Convex hull of ``vertices`` with an lp metric and a sampling grid.

    ``grid`` always contains the vertices. When the grid was produced by
    :func:`make_grid`, ``lattice_origin``, ``spacing`` and ``lattice_index``
    describe the underlying regular lattice so that functions sampled on
    the grid can be evaluated between nodes.
    """

    vertices: np.ndarray
    metric_p: float = 2.0
    grid: np.ndarray | None = None
    lattice_origin: np.ndarray | None = None
    spacing: np.ndarray | None = None
    lattice_index: np.ndarray | None = field(default=None, repr=False)
    resolution: tuple[int, ...] | None = None

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0:
            raise GeometryError("vertex list must be nonempty")
        if not np.all(np.isfinite(V)):
            raise GeometryError("vertices must be finite")
        if not (self.metric_p >= 1):
            raise GeometryError(f"metric_p must lie in [1, inf], got {self.metric_p}")
        object.__setattr__(self, "vertices", V)
        G = V.copy() if self.grid is None else np.atleast_2d(np.asarray(self.grid, dtype=float))
        if G.shape[1] != V.shape[1]:
            raise GeometryError("grid and vertices differ in dimension")
        missing = [v for v in V if _find_row(G, v) is None]
        if missing:
            G = np.vstack([G, np.array(missing)])
        object.__setattr__(self, "grid", G)
        lo, hi = self.bounding_box
        if np.any(G < lo - TOL_GEOM) or np.any(G > hi + TOL_GEOM):
            raise GeometryError("grid points outside the bounding box of the vertices")
        for arr in ("grid", "vertices"):
            getattr(self, arr).setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def h(self) -> float:
        """Largest lattice spacing (0 for a grid without lattice)."""
        if self.spacing is None:
            return 0.0
        return float(np.max(self.spacing))

    def diameter(self, p=None) -> float:
        p = self.metric_p if p is None else p
        V = self.vertices
        return float(lp_distance(V[:, None, :], V[None, :, :], p).max())

    def distance(self, x, y):
        return lp_distance(x, y, self.metric_p)

    def grid_index(self, x, tol=1e-12):
        """Index of the grid node equal to ``x`` (within ``tol``) or None."""
        x = np.asarray(x, dtype=float)
        if self.lattice_index is not None:
            k = np.rint((x - self.lattice_origin) / self.spacing).astype(int)
            if np.all(k >= 0) and np.all(k < self.lattice_index.shape):
                i = int(self.lattice_index[tuple(k)])
                if i >= 0 and np.max(np.abs(self.grid[i] - x)) <= tol:
                    return i
        return _find_row(self.grid, x, tol)


@dataclass(frozen=True)
class CompactSubset:
    """A finite set of grid nodes of ``domain``."""

    domain: ConvexDomain
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise GeometryError("compact subset must be nonempty")
        n = len(self.domain.grid)
        bad = [i for i in idx if not 0 <= i < n]
        if bad:
            raise GeometryError(f"grid indices out of range: {bad}")
        object.__setattr__(self, "indices", idx)

    @property
    def points(self) -> np.ndarray:
        return self.domain.grid[list(self.indices)]

    def __len__(self):
        return len(self.indices)

    def issubset(self, other: "CompactSubset") -> bool:
        return set(self.indices) <= set(other.indices)


def _find_row(G, x, tol=1e-12):
    hits = np.flatnonzero(np.max(np.abs(G - x), axis=1) <= tol)
    return int(hits[0]) if hits.size else None


def _check_point(domain, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != domain.dimension:
        raise GeometryError(
            f"point has dimension {x.shape[-1]}, domain has {domain.dimension}")
    return x


def _hull_contains(V, x, tol=TOL_GEOM):
    lo, hi = V.min(axis=0), V.max(axis=0)
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        return False
    A = np.vstack([V.T, np.ones(len(V))])
    return feasible(A, np.append(x, 1.0), tol=tol)


def contains(domain: ConvexDomain, x, tol=TOL_GEOM) -> bool:
    """True iff ``x`` is a convex combination of the domain's vertices."""
    x = _check_point(domain, x)
    return _hull_contains(domain.vertices, x, tol)


def distance_to_set(x, K: CompactSubset, domain: ConvexDomain | None = None):
    """Exact minimum distance from ``x`` to the finite set ``K``.

    ``x`` may be a single point or an array of points (last axis = coordinates).
    """
    domain = K.domain if domain is None else domain
    if len(K) == 0:
        raise GeometryError("distance to an empty set")
    x = _check_point(domain, x)
    d = lp_distance(x[..., None, :], K.points, domain.metric_p)
    return d.min(axis=-1)


def in_vicinity(x, K: CompactSubset, delta, domain: ConvexDomain | None = None):
    """Membership in the closed delta-vicinity of ``K``."""
    if not delta > 0:
        raise GeometryError(f"delta must be positive, got {delta}")
    return distance_to_set(x, K, domain) <= delta


def make_grid(vertices, resolution, metric_p=2.0, *, point_budget=DEFAULT_POINT_BUDGET,
              tol=TOL_GEOM) -> ConvexDomain:
    """Build a domain whose grid is a regular lattice clipped to the polytope.

    ``resolution`` is the number of lattice cells per axis of the bounding
    box (an int, or one int per axis). Axes along which the box is flat get
    a single lattice layer. All vertices are added to the grid.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    d = V.shape[1]
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (d,)).copy()
    if np.any(res < 1):
        raise GeometryError("resolution must be >= 1")
    lo, hi = V.min(axis=0), V.max(axis=0)
    extent = hi - lo
    res[extent <= 0] = 0
    counts = res + 1
    total = int(np.prod(counts.astype(float)))
    if total > point_budget:
        raise GeometryError(
            f"lattice of {total} points exceeds the point budget {point_budget}")
    spacing = np.where(res > 0, extent / np.maximum(res, 1), 1.0)

    lattice_index = -np.ones(tuple(counts), dtype=np.int64)
    pts = []
    full_box = _is_box(V)
    for k in product(*(range(c) for c in counts)):
        x = lo + np.array(k) * spacing
        x = np.where(np.array(k) == res, hi, x)
        if full_box or _hull_contains(V, x, tol):
            lattice_index[k] = len(pts)
            pts.append(x)
    G = np.array(pts).reshape(-1, d)
    return ConvexDomain(V, metric_p, G, lattice_origin=lo, spacing=spacing,
                        lattice_index=lattice_index,
                        resolution=tuple(int(r) for r in res))


def _is_box(V):
    """Whether the vertex set is exactly the corner set of its bounding box."""
    lo, hi = V.min(axis=0), V.max(axis=0)
    at_corner = np.all((V == lo) | (V == hi), axis=1)
    if not np.all(at_corner):
        return False
    n_corners = 2 ** int(np.sum(hi > lo))
    return len({tuple(v) for v in V}) == n_corners


def domain_from_dict(spec: dict, *, point_budget=DEFAULT_POINT_BUDGET) -> ConvexDomain:
    """Build a domain from ``{dimension, vertices, metric_p, resolution}``.

    ``resolution`` may be omitted (grid = vertices) and ``grid`` may be
    given explicitly instead.
    """
    try:
        V = np.asarray(spec["vertices"], dtype=float)
    except KeyError:
        raise GeometryError("domain: missing field 'vertices'") from None
    V = np.atleast_2d(V)
    dim = spec.get("dimension", V.shape[1])
    if V.shape[1] != dim:
        raise GeometryError(f"domain: vertices have dimension {V.shape[1]}, "
                            f"'dimension' says {dim}")
    p = spec.get("metric_p", 2.0)
    p = math.inf if p in ("inf", "Infinity") else float(p)
    if "resolution" in spec and spec["resolution"] is not None:
        return make_grid(V, spec["resolution"], p, point_budget=point_budget)
    grid = spec.get("grid")
    return ConvexDomain(V, p, None if grid is None else np.asarray(grid, dtype=float))


def domain_to_dict(domain: ConvexDomain) -> dict:
    p = domain.metric_p
    out = {
        "dimension": domain.dimension,
        "vertices": domain.vertices.tolist(),
        "metric_p": "inf" if math.isinf(p) else p,
    }
    if domain.resolution is not None:
        out["resolution"] = list(domain.resolution)
    else:
        out["grid"] = domain.grid.tolist()
    return out
