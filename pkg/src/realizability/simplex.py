"""Dense two-phase tableau simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Phase 1 minimizes the sum of artificial variables.  When its optimum is
positive the problem is infeasible and the phase-1 simplex multipliers give a
Farkas vector ``y`` with ``A.T @ y >= 0`` and ``b @ y < 0``.

Pivoting uses Dantzig's rule and falls back to Bland's rule after a run of
degenerate pivots, which rules out cycling.
"""

from dataclasses import dataclass

import numpy as np


REFACTOR_EVERY = 50


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str                  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray = None
    objective: float = None
    farkas: np.ndarray = None    # set when infeasible
    infeasibility: float = 0.0   # phase-1 optimum (sum of artificials)
    iterations: int = 0


class _Tableau:
    def __init__(self, A, b, tol, degenerate_limit):
        m, n = A.shape
        self.m, self.n = m, n
        self.tol = tol
        self.degenerate_limit = degenerate_limit
        self.T = np.zeros((m, n + m + 1))
        self.T[:, :n] = A
        self.T[:, n:n + m] = np.eye(m)
        self.T[:, -1] = b
        self.original = self.T.copy()
        self.basis = np.arange(n, n + m)
        self.iterations = 0

    def set_costs(self, costs):
        """Reduced-cost row for the given cost vector over all columns."""
        self.costs = np.append(np.asarray(costs, dtype=float), 0.0)
        self.cost = self.costs - self.costs[self.basis] @ self.T

    def refactor(self):
        """Rebuild the tableau from the original data and the current basis,
        discarding accumulated rounding error."""
        B = self.original[:, self.basis]
        self.T = np.linalg.solve(B, self.original)
        self.T[:, self.basis] = np.eye(self.m)
        self.cost = self.costs - self.costs[self.basis] @ self.T

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        rhs = T[:, -1]
        rhs[np.abs(rhs) <= self.tol * 1e-3] = 0.0
        self.cost -= self.cost[j] * T[r]
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed, max_iter, floor=None):
        """Pivot until optimal; stop early once the objective reaches ``floor``
        (a known lower bound, e.g. 0 in phase 1)."""
        degenerate = 0
        tol = self.tol
        while True:
            if floor is not None and -self.cost[-1] <= floor + tol:
                return "optimal"
            rc = np.where(allowed, self.cost[:-1], 0.0)
            if degenerate >= self.degenerate_limit:
                cand = np.flatnonzero(rc < -tol)
                if cand.size == 0:
                    return "optimal"
                j = int(cand[0])
            else:
                j = int(np.argmin(rc))
                if rc[j] >= -tol:
                    return "optimal"
            col = self.T[:, j]
            pos = col > tol
            if not pos.any():
                return "unbounded"
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.T[pos, -1], 0.0) / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
            r = int(ties[np.argmin(self.basis[ties])])
            degenerate = degenerate + 1 if best <= tol else 0
            self.pivot(r, j)
            if self.iterations % REFACTOR_EVERY == 0:
                self.refactor()
            if self.iterations > max_iter:
                raise LPError(f"simplex exceeded {max_iter} pivots")


def solve_lp(A, b, c=None, tol=1e-9, max_iter=200_000, degenerate_limit=50):
    """Solve ``min c.x`` subject to ``A x = b``, ``x >= 0``.

    Returns an :class:`LPResult`.  For infeasible problems ``farkas`` holds
    ``y`` with ``A.T @ y >= -tol`` componentwise and ``b @ y < 0``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign

    tab = _Tableau(A, b, tol, degenerate_limit)
    tab.set_costs(np.concatenate([np.zeros(n), np.ones(m)]))
    allowed = np.ones(n + m, dtype=bool)
    tab.run(allowed, max_iter, floor=0.0)

    w = -tab.cost[-1]
    if w > tol:
        y = 1.0 - tab.cost[n:n + m]
        return LPResult("infeasible", farkas=-sign * y, infeasibility=float(w),
                        iterations=tab.iterations)

    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            nz = np.flatnonzero(np.abs(row) > tol)
            if nz.size:
                tab.pivot(r, int(nz[0]))

    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    tab.set_costs(np.concatenate([c, np.zeros(m)]))
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    status = tab.run(allowed, max_iter)
    x = np.zeros(n + m)
    x[tab.basis] = tab.T[:, -1]
    x = x[:n]
    if status == "unbounded":
        return LPResult("unbounded", x=x, infeasibility=float(w), iterations=tab.iterations)
    return LPResult("optimal", x=x, objective=float(c @ x), infeasibility=float(w),
                    iterations=tab.iterations)


def solve_phase1_highs(A, b, tol=1e-9):
    """Phase-1 problem ``min 1.a  s.t.  A x + a = |b|`` solved with HiGHS.

    The equality duals ``y`` satisfy ``A.T @ y <= 0`` and ``|b| @ y = w``, so a
    positive optimum ``w`` yields the Farkas vector ``-sign(b) * y``.
    """
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix, hstack, identity

    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    As = A * sign[:, None]
    bs = b * sign
    c = np.concatenate([np.zeros(n), np.ones(m)])
    M = hstack([csr_matrix(As), identity(m, format="csr")], format="csr")
    res = linprog(c, A_eq=M, b_eq=bs, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}")
    w = float(res.fun)
    x = res.x[:n]
    if w > tol:
        y = np.asarray(res.eqlin.marginals, dtype=float)
        return LPResult("infeasible", farkas=-sign * y, infeasibility=w, iterations=res.nit)
    return LPResult("optimal", x=x, objective=0.0, infeasibility=max(w, 0.0), iterations=res.nit)
