"""Monotone function sequences and convergence of their convex envelopes.

Generators build increasing or decreasing sequences of grid functions
(constant shifts, vicinity cutoffs, Pasch-Hausdorff ladders); the harnesses
track the envelope of every term against the envelope of the limit; the
proof trace checks, term by term, the inequality chain

    closure f_n(x_k) <= co f_n(x_k) <= mu_k(f_n) < 1 - eps

on a prescribed family of measures.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .envelopes import (TOL_ENV, EnvelopeError, GridFunction, SlopeGrid, closure_at,
                        convex_hull_fn, default_slope_grid, fenchel_conjugate,
                        finite_hull_mask, lipschitz_estimate, tol_equiv)
from .geometry import CompactSubset, ConvexDomain, distance_to_set
from .measures import MeasureFamily, barycenter, integrate, vicinity_mass

__all__ = [
    "CONV_TOL",
    "MONO_TOL",
    "SequenceError",
    "FunctionSequence",
    "ConvergenceReport",
    "ProofTraceScenario",
    "TraceRow",
    "TraceReport",
    "vicinity_cutoff",
    "vicinity_cutoff_sequence",
    "pasch_hausdorff",
    "pasch_hausdorff_ladder",
    "grid_lipschitz",
    "shift_sequence",
    "run_convergence_harness",
    "run_decreasing_harness",
    "proof_trace_check",
]

CONV_TOL = 1e-6
MONO_TOL = 1e-12
N_MAX = 200


class SequenceError(ValueError):
    pass


def _le(a, b, tol):
    """Elementwise ``a <= b + tol`` on extended reals (inf <= inf holds)."""
    with np.errstate(invalid="ignore"):
        return (a <= b) | (a - b <= tol)


def _gap(upper, lower):
    """``upper - lower`` with inf - inf read as 0."""
    both = np.isinf(upper) & np.isinf(lower)
    with np.errstate(invalid="ignore"):
        g = upper - lower
    g[both] = 0.0
    return g


@dataclass(frozen=True)
class FunctionSequence:
    """Monotone sequence of grid functions on one domain with its pointwise limit."""

    terms: tuple[GridFunction, ...]
    limit: GridFunction
    direction: str = "increasing"
    class_tag: str | None = None
    tail_gap: float = field(default=np.nan, init=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise SequenceError("a sequence needs at least one term")
        if self.direction not in ("increasing", "decreasing"):
            raise SequenceError(f"unknown direction {self.direction!r}")
        dom = self.limit.domain
        if any(t.domain is not dom for t in terms):
            raise SequenceError("all terms must live on the limit's domain")
        chain = [t.values for t in terms] + [self.limit.values]
        if self.direction == "decreasing":
            chain = chain[::-1]
        for n, (a, b) in enumerate(zip(chain, chain[1:])):
            if not np.all(_le(a, b, 1e-12)):
                raise SequenceError(f"sequence is not {self.direction} at step {n}")
        object.__setattr__(self, "terms", terms)
        if self.class_tag is None:
            object.__setattr__(self, "class_tag", self.limit.class_tag)
        tail = np.abs(_gap(self.limit.values, terms[-1].values))
        object.__setattr__(self, "tail_gap", float(tail.max()))

    @property
    def domain(self) -> ConvexDomain:
        return self.limit.domain

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True)
class ConvergenceReport:
    """Envelopes of every term and of the limit at the probe points."""

    kind: str
    direction: str
    probes: np.ndarray
    term_envelopes: np.ndarray  # (n_terms, n_probes)
    limit_envelope: np.ndarray
    gaps: np.ndarray
    conv_tol: float
    tol_equiv: float
    slope_step: float = 0.0
    slope_max: float = 0.0
    monotonicity_violations: int = 0

    @property
    def final_gap(self) -> np.ndarray:
        return self.gaps[-1]

    @property
    def max_final_gap(self) -> float:
        return float(self.final_gap.max())

    @property
    def threshold(self) -> float:
        return self.conv_tol + self.tol_equiv

    @property
    def verdict(self) -> str:
        return "converged" if self.max_final_gap <= self.threshold else "not_converged"

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "direction": self.direction,
            "n_terms": int(self.gaps.shape[0]),
            "n_probes": int(self.gaps.shape[1]),
            "max_final_gap": self.max_final_gap,
            "conv_tol": self.conv_tol,
            "tol_equiv": self.tol_equiv,
            "slope_step": self.slope_step,
            "slope_max": self.slope_max,
            "monotonicity_violations": self.monotonicity_violations,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class ProofTraceScenario:
    """Measures, increasing compacts and cutoff parameters for the trace."""

    domain: ConvexDomain
    measures: MeasureFamily
    eps: float
    delta: float
    compacts: tuple[CompactSubset, ...]
    x0: np.ndarray
    n_terms: int | None = None

    def __post_init__(self):
        if not (self.eps > 0 and self.delta > 0):
            raise SequenceError("eps and delta must be positive")
        if self.measures.domain is not self.domain:
            raise SequenceError("measures live on a different domain")
        comp = tuple(self.compacts)
        if not comp:
            raise SequenceError("at least one compact set is required")
        for n, (a, b) in enumerate(zip(comp, comp[1:]), start=1):
            if not a.issubset(b):
                raise SequenceError(f"compact sets are not increasing at n={n}")
        object.__setattr__(self, "compacts", comp)
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))


def vicinity_cutoff(K: CompactSubset, delta: float) -> GridFunction:
    """``x -> 1 - (2/delta) * dist(x, U_{delta/2}(K))`` as a grid function.

    In a normed space the distance to the closed vicinity is
    ``max(0, dist(x, K) - delta/2)``.
    """
    dom = K.domain

    def fn(x):
        d = distance_to_set(np.asarray(x, float), K, dom)
        return 1.0 - (2.0 / delta) * np.maximum(0.0, d - delta / 2.0)

    vals = fn(dom.grid)
    return GridFunction(dom, vals, "continuous_bounded", exact=lambda x: float(fn(x)))


def vicinity_cutoff_sequence(scenario: ProofTraceScenario) -> FunctionSequence:
    """Cutoffs of the scenario's increasing compacts; the limit is the constant 1."""
    dom, delta = scenario.domain, scenario.delta
    last = scenario.compacts[-1]
    far = distance_to_set(dom.grid, last, dom) > delta / 2
    if far.any():
        i = int(np.flatnonzero(far)[0])
        raise SequenceError(
            f"the delta/2-vicinities of the compacts do not cover the grid "
            f"(node {i} at {dom.grid[i].tolist()})")
    terms = tuple(vicinity_cutoff(K, delta) for K in scenario.compacts)
    one = GridFunction(dom, np.ones(len(dom.grid)), exact=lambda x: 1.0)
    return FunctionSequence(terms, one, "increasing")


def grid_lipschitz(f: GridFunction) -> float:
    """Exact Lipschitz constant of f over pairs of grid nodes (inf if f takes +inf)."""
    if not f.finite_mask.all():
        return np.inf
    X, v = f.domain.grid, f.values
    d = f.domain.distance(X[:, None, :], X[None, :, :])
    dv = np.abs(v[:, None] - v[None, :])
    ok = d > 0
    return float((dv[ok] / d[ok]).max()) if ok.any() else 0.0


def pasch_hausdorff(f: GridFunction, n: float) -> GridFunction:
    """``x -> min_y f(y) + n * d(x, y)`` over finite grid nodes ``y``."""
    if not n > 0:
        raise SequenceError("the regularization parameter must be positive")
    dom = f.domain
    fin = f.finite_mask
    if not fin.any():
        raise EnvelopeError("function is +inf everywhere")
    Y, fy = dom.grid[fin], f.values[fin]
    out = np.empty(len(dom.grid))
    step = max(1, (1 << 22) // len(Y))
    for a in range(0, len(dom.grid), step):
        d = dom.distance(dom.grid[a:a + step, None, :], Y[None, :, :])
        out[a:a + step] = (fy + n * d).min(axis=1)
    tag = "continuous_bounded" if np.all(np.isfinite(out)) else f.class_tag
    return GridFunction(dom, out, tag, lower_bound=f.lower_bound)


def pasch_hausdorff_ladder(f: GridFunction, ns: Sequence[float] | None = None) -> FunctionSequence:
    """Increasing sequence of regularizations of ``f`` with limit ``f``.

    Default parameters double from 1 until the grid Lipschitz constant is
    passed (finite f) or ``N_MAX`` terms are reached.
    """
    if ns is None:
        L = grid_lipschitz(f)
        ns, n = [], 1.0
        while len(ns) < N_MAX:
            ns.append(n)
            if n >= L:
                break
            n *= 2.0
    terms = tuple(pasch_hausdorff(f, n) for n in ns)
    return FunctionSequence(terms, f, "increasing")


def shift_sequence(f0: GridFunction, offsets: Sequence[float],
                   direction="increasing") -> FunctionSequence:
    """``f_n = f0 - c_n`` (increasing) or ``f0 + c_n`` (decreasing), c_n >= 0 shrinking."""
    sign = -1.0 if direction == "increasing" else 1.0
    terms = tuple(f0.with_values(f0.values + sign * c) for c in offsets)
    return FunctionSequence(terms, f0, direction)


def _envelopes(seq, kind, probes, S):
    funcs = list(seq.terms) + [seq.limit]
    if kind == "closure":
        out = []
        for f in funcs:
            vals = closure_at(f, S, probes, fenchel_conjugate(f, S))
            if not f.finite_mask.all():
                vals[~finite_hull_mask(f, probes)] = np.inf
            out.append(vals)
        return np.array(out)
    if kind == "hull":
        out = np.empty((len(funcs), len(probes)))
        for n, f in enumerate(funcs):
            for j, x in enumerate(probes):
                try:
                    out[n, j] = convex_hull_fn(f, x)
                except EnvelopeError as exc:
                    raise EnvelopeError(f"term {n}, probe {j}: {exc}") from exc
        return out
    raise SequenceError(f"unknown envelope kind {kind!r}")


def _harness(seq, kind, probes, conv_tol, S):
    dom = seq.domain
    probes = dom.grid if probes is None else np.atleast_2d(np.asarray(probes, float))
    funcs = list(seq.terms) + [seq.limit]
    teq = 0.0
    if kind == "closure":
        S = default_slope_grid(*funcs) if S is None else S
        L = max(lipschitz_estimate(f) for f in funcs)
        teq = tol_equiv(dom.h, L, S.step, dom.diameter(1))
    env = _envelopes(seq, kind, probes, S)
    terms, lim = env[:-1], env[-1]
    if seq.direction == "increasing":
        gaps = np.array([_gap(lim, t) for t in terms])
    else:
        gaps = np.array([_gap(t, lim) for t in terms])
    scale = np.maximum(1.0, np.abs(np.where(np.isfinite(lim), lim, 0.0)))
    bad = (gaps < -MONO_TOL * scale)
    if len(gaps) > 1:
        with np.errstate(invalid="ignore"):
            rising = gaps[1:] - gaps[:-1] > MONO_TOL * scale
        bad[1:] |= rising
    return ConvergenceReport(
        kind, seq.direction, probes, terms, lim, gaps, conv_tol, teq,
        slope_step=0.0 if S is None else S.step,
        slope_max=0.0 if S is None else S.s_max,
        monotonicity_violations=int(bad.sum()))


def run_convergence_harness(seq: FunctionSequence, envelope_kind="closure", probe_points=None,
                            conv_tol=CONV_TOL, slopes: SlopeGrid | None = None) -> ConvergenceReport:
    """Envelope gaps ``env(limit) - env(f_n)`` of an increasing sequence.

    ``envelope_kind`` is ``"closure"`` (double conjugate over one shared slope
    grid) or ``"hull"`` (finitely supported measures). Probes default to the
    grid. The verdict allows ``conv_tol`` plus the closure route's
    discretization tolerance.
    """
    if seq.direction != "increasing":
        raise SequenceError("use run_decreasing_harness for decreasing sequences")
    return _harness(seq, envelope_kind, probe_points, conv_tol, slopes)


def run_decreasing_harness(seq: FunctionSequence, envelope_kind="closure", probe_points=None,
                           conv_tol=CONV_TOL, slopes: SlopeGrid | None = None) -> ConvergenceReport:
    """Envelope gaps ``env(f_n) - env(limit)`` of a decreasing bounded lsc sequence."""
    if seq.direction != "decreasing":
        raise SequenceError("sequence is not decreasing")
    for n, f in enumerate(list(seq.terms) + [seq.limit]):
        if not f.finite_mask.all():
            raise SequenceError(f"term {n} is unbounded; decreasing sequences must be bounded")
    return _harness(seq, envelope_kind, probe_points, conv_tol, slopes)


@dataclass(frozen=True)
class TraceRow:
    n: int
    k: int
    vicinity_mass: float
    closure: float
    hull: float
    integral: float
    threshold: float
    margin: float
    barycenter_distance: float
    n_witnesses: int

    @property
    def chain_holds(self) -> bool:
        return (self.closure <= self.hull + TOL_ENV
                and self.hull <= self.integral + TOL_ENV
                and self.integral < self.threshold)


@dataclass(frozen=True)
class TraceReport:
    rows: tuple[TraceRow, ...]
    margin_min: float
    cutoff_inside_ok: bool
    cutoff_outside_ok: bool

    @property
    def min_margin(self) -> float:
        return min(r.margin for r in self.rows)

    @property
    def passed(self) -> bool:
        return (self.cutoff_inside_ok and self.cutoff_outside_ok
                and all(r.chain_holds for r in self.rows)
                and self.min_margin >= self.margin_min)


def proof_trace_check(scenario: ProofTraceScenario, n_terms: int | None = None,
                      margin_min=1e-6) -> TraceReport:
    """Check the chain ``closure <= co <= mu_k(f_n) < 1 - eps`` for every cutoff.

    For each ``n`` the witness ``k`` is the first measure with
    ``mu_k(U_delta(K_n)) < 1 - eps``; a term without a witness is an error.
    """
    seq = vicinity_cutoff_sequence(scenario)
    N = n_terms or scenario.n_terms or len(seq.terms)
    if N > len(seq.terms):
        raise SequenceError(f"{N} terms requested, scenario has {len(seq.terms)} compacts")
    dom, eps, delta = scenario.domain, scenario.eps, scenario.delta
    fam = scenario.measures
    rows, inside_ok, outside_ok = [], True, True
    for n in range(N):
        K, f = scenario.compacts[n], seq.terms[n]
        dist = distance_to_set(dom.grid, K, dom)
        inside_ok &= bool(np.all(f.values[dist <= delta / 2] == 1.0))
        outside_ok &= bool(np.all(f.values[dist > delta] < 0.0))
        masses = np.array([vicinity_mass(mu, K, delta) for mu in fam])
        witnesses = np.flatnonzero(masses < 1.0 - eps)
        if witnesses.size == 0:
            raise SequenceError(
                f"n={n + 1}: every measure charges U_delta(K_n) with mass >= 1 - eps")
        k = int(witnesses[0])
        mu = fam[k]
        xk = barycenter(mu)
        samples = np.vstack([mu.support, xk])
        S = default_slope_grid(f)
        cl = float(closure_at(f, S, xk, extra=(samples, [f(p) for p in samples]))[0])
        co = float(convex_hull_fn(f, xk, extra_atoms=mu.support))
        integral = integrate(mu, f)
        rows.append(TraceRow(
            n + 1, k, float(masses[k]), cl, co, integral, 1.0 - eps,
            (1.0 - eps) - integral, float(dom.distance(xk, scenario.x0)),
            int(witnesses.size)))
    return TraceReport(tuple(rows), margin_min, inside_ok, outside_ok)
