"""Dense bounded-variable primal simplex (two phases, Bland's rule).

Solves::

    maximize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                0 <= x <= upper

Every variable has lower bound 0; ``upper`` may contain ``inf``.  Nonbasic
variables sit at either bound, so ``x <= 1`` style bounds never become
explicit rows.  The tableau is rebuilt from the original columns every
``refactor_every`` pivots to keep round-off from accumulating.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-11
COST_TOL = 1e-9
FEAS_TOL = 1e-9


class SolverError(RuntimeError):
    """Numerical breakdown or an iteration limit inside the simplex."""


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int


class _Tableau:
    def __init__(self, A, b, upper, basis):
        self.A = A  # original (scaled, sign-fixed) columns, m x N
        self.b = b
        self.upper = upper
        self.basis = np.array(basis, dtype=int)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.refactor()

    def nonbasic_offset(self):
        xu = np.where(self.at_upper, self.upper, 0.0)
        xu[self.basis] = 0.0
        return self.A @ np.nan_to_num(xu, posinf=0.0)

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.A)
            self.beta = np.linalg.solve(B, self.b - self.nonbasic_offset())
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"basis matrix became singular: {exc}") from None
        if not np.all(np.isfinite(self.T)):
            raise SolverError("non-finite entries after refactorization")

    def values(self):
        x = np.where(self.at_upper, self.upper, 0.0)
        x = np.nan_to_num(x, posinf=0.0)
        x[self.basis] = self.beta
        return x


def _ratio_test(tab: _Tableau, g, q, bland: bool):
    """Pick the blocking row for a move of the entering variable along ``-g``.

    Two passes: the first finds the largest step that keeps every basic
    variable within ``FEAS_TOL`` of its bounds; the second picks, among rows
    blocking before that step, the one with the largest pivot.  Near-equal
    columns are common in the revenue LP, and always taking the lowest index
    among degenerate ties tends to pivot on round-off.  With ``bland`` set the
    lowest-index rule is used instead, which guarantees termination.
    """
    ub = tab.upper[tab.basis]
    lo_room = np.maximum(tab.beta, 0.0)
    up_room = np.maximum(ub - tab.beta, 0.0)
    pos = g > PIVOT_TOL
    neg = (g < -PIVOT_TOL) & np.isfinite(ub)
    exact = np.full(g.size, np.inf)
    exact[pos] = lo_room[pos] / g[pos]
    exact[neg] = up_room[neg] / -g[neg]
    flip_step = tab.upper[q]
    if not (pos | neg).any():
        return flip_step, -1, False
    if bland:
        best = exact.min()
        if flip_step <= best:
            return flip_step, -1, False
        ties = np.flatnonzero(exact <= best + 1e-12)
        r = int(ties[np.argmin(tab.basis[ties])])
    else:
        relaxed = np.full(g.size, np.inf)
        relaxed[pos] = (lo_room[pos] + FEAS_TOL) / g[pos]
        relaxed[neg] = (up_room[neg] + FEAS_TOL) / -g[neg]
        theta = relaxed.min()
        if flip_step <= theta and flip_step <= exact.min() + FEAS_TOL:
            return flip_step, -1, False
        cand = np.flatnonzero(exact <= theta)
        r = int(cand[np.argmax(np.abs(g[cand]))])
    return float(exact[r]), r, bool(neg[r])


def _run(tab: _Tableau, cost, max_iter, refactor_every, counter):
    N = tab.A.shape[1]
    is_basic = np.zeros(N, dtype=bool)
    since = 0
    stall, stall_limit = 0, 2 * (tab.A.shape[0] + N)
    while True:
        if counter[0] >= max_iter:
            raise SolverError(f"iteration limit {max_iter} reached")
        is_basic[:] = False
        is_basic[tab.basis] = True
        d = cost - cost[tab.basis] @ tab.T
        up_ok = (~is_basic) & (~tab.at_upper) & (d > COST_TOL) & (tab.upper > 0)
        down_ok = (~is_basic) & tab.at_upper & (d < -COST_TOL)
        cand = np.flatnonzero(up_ok | down_ok)
        if cand.size == 0:
            return "optimal"
        q = int(cand[0])  # Bland: lowest index
        s = 1.0 if up_ok[q] else -1.0
        g = s * tab.T[:, q]

        step, leave_row, leave_to_upper = _ratio_test(tab, g, q, bland=stall > stall_limit)
        if not np.isfinite(step):
            return "unbounded"
        counter[0] += 1
        stall = stall + 1 if step <= FEAS_TOL else 0
        tab.beta -= g * step
        if leave_row < 0:
            tab.at_upper[q] = not tab.at_upper[q]
            continue

        piv = tab.T[leave_row, q]
        if abs(piv) < BREAKDOWN_TOL:
            raise SolverError(f"pivot {piv:.3e} below breakdown tolerance at column {q}")
        out = tab.basis[leave_row]
        tab.at_upper[out] = leave_to_upper
        entering_value = step if s > 0 else tab.upper[q] - step
        tab.at_upper[q] = False
        tab.T[leave_row] /= piv
        col = tab.T[:, q].copy()
        col[leave_row] = 0.0
        tab.T -= np.outer(col, tab.T[leave_row])
        tab.basis[leave_row] = q
        tab.beta[leave_row] = entering_value
        since += 1
        if since >= refactor_every:
            tab.refactor()
            since = 0


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None,
                max_iter: int = 200_000, refactor_every: int = 50) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # row scaling
    A = np.vstack([A_ub, A_eq])
    b = np.concatenate([b_ub, b_eq])
    scale = np.abs(A).max(axis=1) if m else np.zeros(0)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale

    flip = b < 0
    n_art = int(np.sum(flip[:m_ub])) + m_eq
    N = n + m_ub + n_art
    full = np.zeros((m, N))
    full[:, :n] = A
    full[np.arange(m_ub), n + np.arange(m_ub)] = 1.0
    basis = []
    art = n + m_ub
    art_cols = []
    for r in range(m):
        if flip[r]:
            full[r] *= -1.0
            b[r] = -b[r]
        if r < m_ub and not flip[r]:
            basis.append(n + r)
        else:
            full[r, art] = 1.0
            basis.append(art)
            art_cols.append(art)
            art += 1
    ub_full = np.concatenate([upper, np.full(m_ub + n_art, np.inf)])

    tab = _Tableau(full, b, ub_full, basis)
    counter = [0]
    if art_cols:
        cost1 = np.zeros(N)
        cost1[art_cols] = -1.0
        status = _run(tab, cost1, max_iter, refactor_every, counter)
        tab.refactor()
        infeas = float(tab.values()[art_cols].sum())
        if status != "optimal":
            raise SolverError(f"phase one ended with status {status}")
        if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max())):
            return LPResult("infeasible", None, None, counter[0])
        tab.upper[art_cols] = 0.0
        tab.at_upper[art_cols] = False

    cscale = float(np.abs(c).max()) or 1.0
    cost2 = np.zeros(N)
    cost2[:n] = c / cscale
    # re-price after a clean refactorization; stop once no pivot is needed
    for _ in range(5):
        before = counter[0]
        status = _run(tab, cost2, max_iter, refactor_every, counter)
        if status == "unbounded":
            return LPResult("unbounded", None, None, counter[0])
        tab.refactor()
        if counter[0] == before:
            break
    x = tab.values()[:n]
    if np.any(x < -1e-7) or np.any(x > upper + 1e-7):
        raise SolverError("final refactorization produced an out-of-bounds point")
    x = np.clip(x, 0.0, upper)
    return LPResult("optimal", x, float(c @ x), counter[0])
