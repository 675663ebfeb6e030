"""Dense revised simplex for small equality-form linear programs.

Solves::

    minimize    c @ w
    subject to  A @ w = b,  w >= 0

The row count is tiny here (a barycenter constraint per coordinate plus
normalization), so the basis is refactored from scratch on every pivot
with ``numpy.linalg.solve``. Pricing is Dantzig's rule; after a run of
degenerate pivots the solver switches to Bland's rule, which cannot cycle.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "LPResult", "lp_solve", "feasible"]


class LPError(RuntimeError):
    """Raised when the simplex iteration cap is hit."""


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    basis: tuple[int, ...] = ()
    duals: np.ndarray | None = None
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _simplex(A, b, c, basis, allowed, tol, max_iter, degenerate_switch):
    """Primal simplex from a feasible basis. Mutates ``basis`` in place."""
    m, n = A.shape
    use_bland = False
    degenerate_run = 0
    for it in range(max_iter):
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        reduced = c - A.T @ y
        reduced[~allowed] = 0.0
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return "optimal", xb, y, it
        if use_bland:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmin(reduced[candidates])])
        d = np.linalg.solve(B, A[:, j])
        rows = np.flatnonzero(d > tol)
        if rows.size == 0:
            return "unbounded", xb, y, it
        ratios = np.maximum(xb[rows], 0.0) / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows leave the basic variable of lowest index
        leave = int(min(ties, key=lambda r: basis[r]))
        if best <= tol:
            degenerate_run += 1
            if degenerate_run >= degenerate_switch:
                use_bland = True
        else:
            degenerate_run = 0
        basis[leave] = j
    raise LPError(f"simplex did not terminate within {max_iter} pivots")


def lp_solve(c, A, b, *, tol=1e-10, feas_tol=1e-9, max_iter=None,
             degenerate_switch=50):
    """Solve ``min c@w s.t. A@w = b, w >= 0`` by two-phase revised simplex.

    Parameters
    ----------
    c : array_like, shape (n,)
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    tol : float
        Pivot and reduced-cost tolerance.
    feas_tol : float
        Largest phase-1 residual (relative to ``max|b|``) still accepted as
        feasible.
    max_iter : int, optional
        Pivot cap per phase; defaults to ``50 * (m + n)``.
    degenerate_switch : int
        Consecutive degenerate pivots before falling back to Bland's rule.

    Returns
    -------
    LPResult
        ``x`` is a basic optimal solution with at most ``m`` nonzeros.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel().copy()
    c = np.asarray(c, dtype=float).ravel()
    m, n = A.shape
    if b.size != m or c.size != n:
        raise ValueError("shape mismatch between c, A and b")
    if max_iter is None:
        max_iter = 50 * (m + n)

    A = A.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: artificials in columns n..n+m-1
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    status, xb, _, it1 = _simplex(A1, b, c1, basis, allowed, tol,
                                  max_iter, degenerate_switch)
    infeas = float(sum(xb[r] for r in range(m) if basis[r] >= n))
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if infeas > feas_tol * scale:
        return LPResult("infeasible", None, np.inf, iterations=it1)

    # drive zero-level artificials out where a structural column can replace them
    for r in range(m):
        if basis[r] < n:
            continue
        Binv_row = np.linalg.solve(A1[:, basis].T, np.eye(m)[r])
        row = Binv_row @ A
        row[[k for k in basis if k < n]] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size:
            basis[r] = int(cand[0])
    # artificials still basic sit on redundant rows; keep them out of pricing
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    c2 = np.concatenate([c, np.zeros(m)])
    status, xb, y, it2 = _simplex(A1, b, c2, basis, allowed, tol,
                                  max_iter, degenerate_switch)
    x = np.zeros(n + m)
    x[basis] = np.maximum(xb, 0.0)
    x = x[:n]
    if status == "unbounded":
        return LPResult("unbounded", x, -np.inf, tuple(basis), y, it1 + it2)
    y = y.copy()
    y[neg] *= -1.0
    return LPResult("optimal", x, float(c @ x), tuple(basis), y, it1 + it2)


def feasible(A, b, tol=1e-9) -> bool:
    """True iff ``{w >= 0 : A@w = b}`` is nonempty up to ``tol``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return lp_solve(np.zeros(A.shape[1]), A, b, feas_tol=tol).success
