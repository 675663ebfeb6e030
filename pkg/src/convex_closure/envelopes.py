"""Convex closure and convex hull of grid-sampled functions.

Two independent routes to the closure are provided:

* the discrete double Fenchel transform over a finite slope grid
  (:func:`fenchel_conjugate`, :func:`biconjugate`), and
* the barycentric linear program over probability weights on grid nodes
  (:func:`envelope_via_measures`).

``+inf`` values are kept as an explicit sentinel: they never enter a
conjugate maximand or an LP column.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, NamedTuple

import numpy as np

from .geometry import ConvexDomain, GeometryError, TOL_GEOM, contains
from .lp import LPError, feasible, lp_solve
from .measures import FiniteMeasure, caratheodory_reduce

__all__ = [
    "TOL_ENV",
    "CLASS_TAGS",
    "EnvelopeError",
    "GridFunction",
    "SlopeGrid",
    "AffineFunction",
    "EnvelopeResult",
    "lipschitz_estimate",
    "default_slope_grid",
    "tol_equiv",
    "fenchel_conjugate",
    "legendre_1d",
    "biconjugate",
    "closure_at",
    "finite_hull_mask",
    "envelope_via_measures",
    "envelope_on_grid",
    "convex_hull_fn",
    "affine_minorant",
    "function_from_dict",
    "function_to_dict",
]

TOL_ENV = 1e-8
CLASS_TAGS = ("continuous_bounded", "lsc_lower_bounded", "lsc_bounded")
_CHUNK = 1 << 22  # entries per slope-by-node block


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real function sampled on ``domain.grid``.

    Off-grid values follow the class: multilinear interpolation inside the
    lattice cell for ``continuous_bounded``, the minimum over the cell's
    nodes for the lsc classes. A function built with ``exact`` uses that
    callable off the grid instead.
    """

    domain: ConvexDomain
    values: np.ndarray
    class_tag: str = "continuous_bounded"
    lower_bound: float | None = None
    exact: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != len(self.domain.grid):
            raise EnvelopeError(
                f"{v.size} values for a grid of {len(self.domain.grid)} points")
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise EnvelopeError("values must be finite or +inf")
        if self.class_tag not in CLASS_TAGS:
            raise EnvelopeError(f"unknown class tag {self.class_tag!r}")
        finite = np.isfinite(v)
        if self.class_tag != "lsc_lower_bounded" and not finite.all():
            raise EnvelopeError(f"{self.class_tag} functions cannot take the value +inf")
        lb = self.lower_bound
        fmin = float(v[finite].min()) if finite.any() else np.inf
        if lb is None:
            lb = fmin
        elif lb > fmin:
            raise EnvelopeError(f"lower bound {lb} exceeds the minimum value {fmin}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lower_bound", float(lb))

    @classmethod
    def from_callable(cls, domain, fn, class_tag="continuous_bounded", exact=True):
        vals = [fn(x) for x in domain.grid]
        return cls(domain, vals, class_tag, exact=fn if exact else None)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def is_lsc(self) -> bool:
        return self.class_tag != "continuous_bounded"

    def with_values(self, values, class_tag=None) -> "GridFunction":
        return GridFunction(self.domain, values, class_tag or self.class_tag)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        i = self.domain.grid_index(x)
        if i is not None:
            return float(self.values[i])
        if self.exact is not None:
            return float(self.exact(x))
        return self._off_grid(x)

    def _off_grid(self, x):
        dom = self.domain
        if dom.lattice_index is None:
            return float(self.values[_nearest(dom.grid, x)])
        res = np.asarray(dom.resolution)
        t = (x - dom.lattice_origin) / dom.spacing
        k0 = np.clip(np.floor(t).astype(int), 0, np.maximum(res - 1, 0))
        frac = np.where(res > 0, np.clip(t - k0, 0.0, 1.0), 0.0)
        nodes, weights = [], []
        for corner in product(*[(0, 1) if r > 0 else (0,) for r in res]):
            c = np.array(corner)
            i = int(dom.lattice_index[tuple(k0 + c)])
            if i < 0:
                continue
            nodes.append(i)
            weights.append(np.prod(np.where(c == 1, frac, 1.0 - frac)))
        if not nodes:
            return float(self.values[_nearest(dom.grid, x)])
        vals = self.values[nodes]
        if self.is_lsc:
            return float(vals.min())
        w = np.array(weights)
        if w.sum() <= 0:
            return float(self.values[_nearest(dom.grid, x)])
        return float(w @ vals / w.sum())


def _nearest(G, x):
    return int(np.argmin(np.abs(G - x).sum(axis=1)))


@dataclass(frozen=True)
class SlopeGrid:
    """Finite symmetric set of dual slopes containing zero."""

    slopes: np.ndarray
    step: float = 0.0
    s_max: float = 0.0

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        if S.shape[0] == 0:
            raise EnvelopeError("slope grid must be nonempty")
        if not np.any(np.all(S == 0, axis=1)):
            raise EnvelopeError("slope grid must contain the zero slope")
        key = {tuple(s) for s in S}
        if any(tuple(-s + 0.0) not in key for s in S):
            raise EnvelopeError("slope grid must be symmetric")
        S.setflags(write=False)
        object.__setattr__(self, "slopes", S)

    @classmethod
    def regular(cls, dimension, s_max, step):
        if s_max <= 0 or step <= 0:
            return cls(np.zeros((1, dimension)), 0.0, 0.0)
        k = int(np.ceil(s_max / step - 1e-12))
        axis = np.arange(-k, k + 1) * step
        mesh = np.meshgrid(*([axis] * dimension), indexing="ij")
        S = np.stack([m.ravel() for m in mesh], axis=1)
        return cls(S, float(step), float(k * step))

    def __len__(self):
        return len(self.slopes)


@dataclass(frozen=True)
class AffineFunction:
    slope: np.ndarray
    intercept: float

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ np.asarray(self.slope) + self.intercept


def lipschitz_estimate(f: GridFunction) -> float:
    """Largest difference quotient between lattice neighbours along an axis.

    Pairs with a +inf endpoint are skipped. Grids without a lattice fall
    back to the maximum over all pairs of finite nodes.
    """
    dom = f.domain
    fin = f.finite_mask
    if dom.lattice_index is None:
        X, v = dom.grid[fin], f.values[fin]
        if len(v) < 2:
            return 0.0
        dv = np.abs(v[:, None] - v[None, :])
        dx = np.abs(X[:, None, :] - X[None, :, :]).max(axis=-1)
        ok = dx > 0
        return float((dv[ok] / dx[ok]).max()) if ok.any() else 0.0
    L = 0.0
    idx = dom.lattice_index
    for axis in range(dom.dimension):
        if idx.shape[axis] < 2:
            continue
        a = np.moveaxis(idx, axis, 0)
        lo, hi = a[:-1].ravel(), a[1:].ravel()
        ok = (lo >= 0) & (hi >= 0)
        lo, hi = lo[ok], hi[ok]
        ok = fin[lo] & fin[hi]
        if not ok.any():
            continue
        dq = np.abs(f.values[hi[ok]] - f.values[lo[ok]]) / dom.spacing[axis]
        L = max(L, float(dq.max()))
    return L


def default_slope_grid(*functions: GridFunction, factor=4.0, step=None) -> SlopeGrid:
    """Regular slope grid on ``[-s_max, s_max]^d`` with ``s_max = factor * L_est``.

    ``L_est`` is the largest :func:`lipschitz_estimate` over ``functions``;
    the default step is ``L_est * h``.
    """
    dom = functions[0].domain
    L = max(lipschitz_estimate(f) for f in functions)
    if step is None:
        step = L * (dom.h if dom.h > 0 else 1.0 / 64)
    return SlopeGrid.regular(dom.dimension, factor * L, step)


def tol_equiv(h, L, slope_step, diameter) -> float:
    """Allowed gap between the biconjugate and the LP envelope."""
    return 2.0 * L * h + 2.0 * slope_step * diameter


def _finite_part(f):
    fin = f.finite_mask
    if not fin.any():
        raise EnvelopeError("function is +inf everywhere; its conjugate is -inf")
    return f.domain.grid[fin], f.values[fin]


def fenchel_conjugate(f: GridFunction, S: SlopeGrid, method="brute", return_argmax=False):
    """``f*(s) = max_x <s, x> - f(x)`` over finite grid nodes, for each slope.

    ``method="fast"`` uses the linear-time 1D transform (d = 1 only).
    With ``return_argmax`` also returns, per slope, the grid index of the
    lowest-index maximizer (brute method).
    """
    X, v = _finite_part(f)
    slopes = S.slopes
    if method == "fast":
        if f.domain.dimension != 1:
            raise EnvelopeError("the fast transform is one-dimensional")
        return legendre_1d(X[:, 0], v, slopes[:, 0])
    out = np.empty(len(slopes))
    arg = np.empty(len(slopes), dtype=int)
    step = max(1, _CHUNK // max(len(v), 1))
    for a in range(0, len(slopes), step):
        block = slopes[a:a + step] @ X.T - v
        arg[a:a + step] = np.argmax(block, axis=1)
        out[a:a + step] = block[np.arange(len(block)), arg[a:a + step]]
    if return_argmax:
        grid_idx = np.flatnonzero(f.finite_mask)[arg]
        return out, grid_idx
    return out


def legendre_1d(x, fx, s):
    """Discrete Legendre transform in one dimension via the lower hull.

    Parameters
    ----------
    x, fx : ndarray
        Sample points (any order) and finite values.
    s : ndarray
        Slopes.

    Returns
    -------
    ndarray
        ``max_i s*x_i - fx_i`` for each slope.
    """
    order = np.lexsort((fx, x))
    x, fx = np.asarray(x, float)[order], np.asarray(fx, float)[order]
    hull = []
    for i in range(len(x)):
        if hull and x[hull[-1]] == x[i]:
            continue  # equal abscissa: the lower value came first
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (fx[i] - fx[a]) - (fx[b] - fx[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    hx, hf = x[hull], fx[hull]
    edge = np.diff(hf) / np.diff(hx)
    k = np.searchsorted(edge, np.asarray(s, float))
    return s * hx[k] - hf[k]


def closure_at(f: GridFunction, S: SlopeGrid, points, conj=None, extra=None) -> np.ndarray:
    """Evaluate ``max_s <s, x> - f*(s)`` at each row of ``points``.

    ``extra`` is an optional ``(points, values)`` pair of additional samples
    of f entering the conjugate alongside the grid nodes.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if conj is None:
        conj = fenchel_conjugate(f, S)
    if extra is not None:
        Xe, ve = np.atleast_2d(np.asarray(extra[0], float)), np.asarray(extra[1], float)
        fin = np.isfinite(ve)
        if fin.any():
            conj = np.maximum(conj, (S.slopes @ Xe[fin].T - ve[fin]).max(axis=1))
    out = np.empty(len(P))
    step = max(1, _CHUNK // max(len(conj), 1))
    for a in range(0, len(P), step):
        out[a:a + step] = (P[a:a + step] @ S.slopes.T - conj).max(axis=1)
    return out


def finite_hull_mask(f: GridFunction, points=None) -> np.ndarray:
    """Which points lie in the convex hull of the nodes where f is finite."""
    dom = f.domain
    P = dom.grid if points is None else np.atleast_2d(np.asarray(points, float))
    fin = f.finite_mask
    if fin.all():
        return np.ones(len(P), dtype=bool)
    X = dom.grid[fin]
    A = np.vstack([X.T, np.ones(len(X))])
    out = np.empty(len(P), dtype=bool)
    for i, p in enumerate(P):
        if points is None and fin[i]:
            out[i] = True
        else:
            out[i] = feasible(A, np.append(p, 1.0), tol=TOL_GEOM)
    return out


def biconjugate(f: GridFunction, S: SlopeGrid | None = None) -> GridFunction:
    """Discrete double Fenchel transform of ``f`` on its grid.

    Nodes outside the convex hull of f's finite nodes get +inf. The result
    evaluates exactly off the grid, as a maximum of affine functions.
    """
    S = default_slope_grid(f) if S is None else S
    conj = fenchel_conjugate(f, S)
    vals = closure_at(f, S, f.domain.grid, conj)
    has_inf = not f.finite_mask.all()
    if has_inf:
        vals[~finite_hull_mask(f)] = np.inf

    def exact(x):
        if has_inf and not finite_hull_mask(f, x)[0]:
            return np.inf
        return float(closure_at(f, S, x, conj)[0])

    tag = "lsc_lower_bounded" if has_inf else f.class_tag
    return GridFunction(f.domain, vals, tag, exact=exact)


class EnvelopeResult(NamedTuple):
    value: float
    measure: FiniteMeasure | None


def _barycentric_lp(dom, X, v, x):
    A = np.vstack([X.T, np.ones(len(X))])
    b = np.append(x, 1.0)
    try:
        res = lp_solve(v, A, b, feas_tol=TOL_GEOM)
    except LPError as exc:
        raise EnvelopeError(f"LP failed at x={np.asarray(x).tolist()}: {exc}") from exc
    if not res.success:
        return EnvelopeResult(np.inf, None)
    w = res.x
    keep = w > 1e-15
    w = w[keep] / w[keep].sum()
    mu = FiniteMeasure(dom, X[keep], w, check_support=False)
    if len(mu) > dom.dimension + 1:
        mu = caratheodory_reduce(mu)
    # reduction moves along objective-neutral directions at an optimum
    return EnvelopeResult(float(w @ v[keep]), mu)


def _check_inside(dom, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (dom.dimension,):
        raise GeometryError(f"point of shape {x.shape} for a {dom.dimension}-d domain")
    if not contains(dom, x):
        raise EnvelopeError(f"query point {x.tolist()} lies outside the domain")
    return x


def envelope_via_measures(f: GridFunction, x) -> EnvelopeResult:
    """Minimize ``sum_i w_i f(x_i)`` over probability weights on finite
    grid nodes with barycenter ``x``.

    Returns the optimal value and an optimal measure with at most ``d + 1``
    atoms, or ``(inf, None)`` when ``x`` is outside the hull of finite nodes.
    """
    dom = f.domain
    x = _check_inside(dom, x)
    X, v = _finite_part(f)
    return _barycentric_lp(dom, X, v, x)


def envelope_on_grid(f: GridFunction) -> np.ndarray:
    """:func:`envelope_via_measures` value at every grid node."""
    X, v = _finite_part(f)
    return np.array([_barycentric_lp(f.domain, X, v, x).value for x in f.domain.grid])


def convex_hull_fn(f: GridFunction, x, return_measure=False, extra_atoms=None):
    """Infimum of ``mu(f)`` over finitely supported ``mu`` with barycenter ``x``.

    Candidate atoms are the finite grid nodes plus ``x`` itself, valued by
    f's off-grid rule, so that ``co f(x) <= f(x)`` holds at every point.
    ``extra_atoms`` adds further candidate points (valued by ``f``).
    """
    dom = f.domain
    x = _check_inside(dom, x)
    X, v = _finite_part(f)
    cand = [] if dom.grid_index(x) is not None else [x]
    if extra_atoms is not None:
        cand.extend(p for p in np.atleast_2d(np.asarray(extra_atoms, float))
                    if dom.grid_index(p) is None)
    if cand:
        C = np.array(cand)
        fc = np.array([f(p) for p in C])
        fin = np.isfinite(fc)
        X = np.vstack([X, C[fin]])
        v = np.append(v, fc[fin])
    res = _barycentric_lp(dom, X, v, x)
    return res if return_measure else res.value


def affine_minorant(f: GridFunction, x0, Delta: float, S: SlopeGrid | None = None,
                    reference: float | None = None, dual_fallback: bool = False
                    ) -> AffineFunction:
    """Affine ``alpha <= f`` on the grid with ``co f(x0) <= alpha(x0) + Delta/2``.

    The slope is the maximizer (lowest index on ties) of
    ``<s, x0> - f*(s)`` over ``S``; the intercept is ``-f*(s)``. The
    closure value at ``x0`` is taken from the LP route unless ``reference``
    is given.

    With ``dual_fallback`` a slope grid that misses the target is replaced
    by the optimal dual of the barycentric LP at ``x0``, which is an affine
    function supporting the hull of the graph at ``x0``.
    """
    if not Delta > 0:
        raise EnvelopeError("Delta must be positive")
    S = default_slope_grid(f) if S is None else S
    x0 = np.asarray(x0, dtype=float)
    if reference is None:
        reference = envelope_via_measures(f, x0).value
    if not np.isfinite(reference):
        raise EnvelopeError("the closure is +inf at x0; no affine minorant can approach it")
    conj = fenchel_conjugate(f, S)
    k = int(np.argmax(S.slopes @ x0 - conj))
    alpha = AffineFunction(np.array(S.slopes[k]), -float(conj[k]))
    if dual_fallback and reference > alpha(x0) + Delta / 2:
        alpha = _dual_minorant(f, x0)
    fin = f.finite_mask
    excess = alpha(f.domain.grid[fin]) - f.values[fin]
    if excess.max() > TOL_ENV:
        raise EnvelopeError(f"affine function exceeds f by {excess.max():.3g}")
    if reference > alpha(x0) + Delta / 2:
        raise EnvelopeError(
            f"best slope reaches {alpha(x0):.6g} at x0 but the closure is {reference:.6g}; "
            f"Delta/2 = {Delta / 2:.3g} is not met, use a denser or wider slope grid")
    return alpha


def _dual_minorant(f, x0):
    X, v = _finite_part(f)
    A = np.vstack([X.T, np.ones(len(X))])
    res = lp_solve(v, A, np.append(x0, 1.0), feas_tol=TOL_GEOM)
    if not res.success or res.duals is None:
        raise EnvelopeError(f"no dual certificate at x0={x0.tolist()}")
    y = res.duals
    # dual feasibility: <y[:d], x_i> + y[d] <= f(x_i)
    return AffineFunction(np.array(y[:-1]), float(y[-1]))


def function_from_dict(domain: ConvexDomain, data: dict) -> GridFunction:
    try:
        raw = data["values"]
    except KeyError:
        raise EnvelopeError("function: missing field 'values'") from None
    vals = [np.inf if v in ("inf", "+inf", "Infinity") else float(v) for v in raw]
    return GridFunction(domain, vals, data.get("class_tag", "continuous_bounded"))


def function_to_dict(f: GridFunction, domain_ref=None) -> dict:
    return {
        "domain_ref": domain_ref,
        "values": ["inf" if not np.isfinite(v) else float(v) for v in f.values],
        "class_tag": f.class_tag,
    }
