"""Dense tableau simplex for small linear programs.

Solves ``min c.z  s.t.  A z = b, z >= 0`` starting from a caller-supplied
feasible basis. Entering variables follow Dantzig's rule (most negative
reduced cost) while the objective improves; after a long degenerate stall
the rule switches permanently to Bland's smallest-index rule, which
precludes cycling. The iteration cap 50 * (rows + cols) turns a runaway
solve into :class:`SimplexCycleGuard` so callers can fall back to an
uncertified path.

The tableau is refactorized from the original data every few dozen pivots,
and optimality is only declared against a freshly factorized tableau, so
accumulated elimination error cannot produce a bogus optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimplexCycleGuard

REDUCED_COST_TOL = 1e-9
PIVOT_TOL = 1e-8
REFACTOR_EVERY = 32


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str  # "optimal" | "unbounded"
    basis: np.ndarray


def _refactor(A, b, basis):
    bmat = A[:, basis]
    try:
        tableau = np.linalg.solve(bmat, A)
        rhs = np.linalg.solve(bmat, b)
    except np.linalg.LinAlgError as exc:
        raise SimplexCycleGuard(f"basis became singular: {exc}") from None
    if rhs.min() < -1e-7:
        raise SimplexCycleGuard("basis went infeasible during refactorization")
    np.maximum(rhs, 0.0, out=rhs)
    return tableau, rhs


def _solution(A, b, c, basis, iterations, status):
    rhs = np.linalg.solve(A[:, basis], b)
    x = np.zeros(A.shape[1])
    x[basis] = np.maximum(rhs, 0.0)
    return SimplexResult(x, float(c @ x), iterations, status, basis)


def solve_from_basis(
    c,
    A,
    b,
    basis,
    max_iter: int | None = None,
) -> SimplexResult:
    """Run phase-2 simplex from a feasible starting basis.

    ``A[:, basis]`` must be invertible and the basic solution nonnegative;
    both are checked. Raises SimplexCycleGuard when the iteration cap is hit
    (carrying the best basic solution found so far) or when roundoff drives
    the basis singular or infeasible.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    basis = np.array(basis, dtype=int)
    if basis.shape != (m,):
        raise ValueError(f"basis must list {m} columns")
    if max_iter is None:
        max_iter = 50 * (m + n)

    try:
        tableau, rhs = _refactor(A, b, basis)
    except SimplexCycleGuard:
        raise ValueError("starting basis is infeasible") from None
    fresh = True
    bland_mode = False
    stall = 0
    stall_limit = 2 * m + 10
    last_objective = np.inf

    it = 0
    while it < max_iter:
        reduced = c - c[basis] @ tableau
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced < -REDUCED_COST_TOL)
        if candidates.size == 0:
            if fresh:
                return _solution(A, b, c, basis, it, "optimal")
            tableau, rhs = _refactor(A, b, basis)
            fresh = True
            continue
        if bland_mode:
            enter = int(candidates[0])  # smallest index
        else:
            enter = int(candidates[np.argmin(reduced[candidates])])

        col = tableau[:, enter]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            if fresh:
                return _solution(A, b, c, basis, it, "unbounded")
            tableau, rhs = _refactor(A, b, basis)
            fresh = True
            continue
        ratios = rhs[rows] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        leave = int(ties[np.argmin(basis[ties])])  # smallest basis index on ties

        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        rhs[leave] /= pivot
        factor = tableau[:, enter].copy()
        factor[leave] = 0.0
        tableau -= np.outer(factor, tableau[leave])
        rhs -= factor * rhs[leave]
        np.maximum(rhs, 0.0, out=rhs)
        basis[leave] = enter

        objective = float(c[basis] @ rhs)
        if objective < last_objective - 1e-15 * max(1.0, abs(last_objective)):
            stall = 0
        else:
            stall += 1
            if stall >= stall_limit:
                bland_mode = True  # anti-cycling from here on
        last_objective = objective

        it += 1
        if it % REFACTOR_EVERY == 0:
            tableau, rhs = _refactor(A, b, basis)
            fresh = True
        else:
            fresh = False

    raise SimplexCycleGuard(
        f"simplex hit the iteration cap of {max_iter}",
        best=_solution(A, b, c, basis, max_iter, "iteration-cap"),
    )
