"""Brute-force revenue LP over ex-post outcome tables.

The oracle knows nothing about virtual values or closed forms: it writes the
revenue-maximization program over every ``y0``/``y1`` entry and solves it with
the simplex in :mod:`riskauction.simplex`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import DirectMechanism, Instance
from .simplex import SolverError, linprog_max
from .verify import check_mechanism

MAX_VARIABLES = 100_000


class SizeError(ValueError):
    """The LP would exceed the variable-count guard."""

    def __init__(self, size: int, limit: int = MAX_VARIABLES):
        super().__init__(f"LP would have {size} variables; the limit is {limit}")
        self.size = size
        self.limit = limit


@dataclass
class LPModel:
    n: int
    K: int
    M: int
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    upper: np.ndarray
    # row labels, e.g. ("bic", i, k, k'), ("ir", i, k), ("outcome", i, profile), ("item", profile)
    ub_rows: List[Tuple] = field(default_factory=list)
    eq_rows: List[Tuple] = field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return int(self.c.size)

    def row_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for label in self.ub_rows + self.eq_rows:
            counts[label[0]] = counts.get(label[0], 0) + 1
        return counts

    def index(self, side: int, i: int, j: int, profile) -> int:
        """Column of ``y{side}[i, j, profile]``."""
        flat = int(np.ravel_multi_index(tuple(profile), (self.K,) * self.n)) if self.n else 0
        return ((side * self.n + i) * self.M + j) * self.K**self.n + flat

    def tables(self, x: np.ndarray) -> DirectMechanism:
        arr = np.asarray(x).reshape((2, self.n, self.M) + (self.K,) * self.n)
        return DirectMechanism(arr[0], arr[1])


@dataclass
class LPSolution:
    status: str  # "optimal", "infeasible", "unbounded"
    objective: Optional[float]
    y: Optional[np.ndarray]
    iterations: int = 0


def lp_size(inst: Instance) -> int:
    return 2 * inst.n * inst.M * inst.K**inst.n


def build_primal_lp(inst: Instance) -> LPModel:
    size = lp_size(inst)
    if size > MAX_VARIABLES:
        raise SizeError(size)
    n, K, M = inst.n, inst.K, inst.M
    P = K**n
    z, v = inst.payments, inst.values
    weights = inst.profile_weights().reshape(-1)  # f(k_1)...f(k_n) per flat profile
    profiles = np.array(np.unravel_index(np.arange(P), (K,) * n)).T  # (P, n)

    def col(side, i, j):
        start = ((side * n + i) * M + j) * P
        return slice(start, start + P)

    c = np.zeros(size)
    for side in (0, 1):
        for i in range(n):
            for j in range(M):
                c[col(side, i, j)] = weights * z[j]

    ub_rows, ub_labels = [], []
    eq_rows, eq_labels = [], []
    win_u = inst.u(v[:, None] - z[None, :])  # (K, M)
    lose_u = inst.u(-z)
    for i in range(n):
        own = profiles[:, i]
        w_minus = weights / inst.pmf[own]  # f(k_{-i})

        def utility_row(k_true, k_report):
            # interim utility of a v_{k_true} buyer who reports k_report
            row = np.zeros(size)
            mask = (own == k_report) * w_minus
            for j in range(M):
                row[col(1, i, j)] = mask * win_u[k_true, j]
                row[col(0, i, j)] = mask * lose_u[j]
            return row

        truthful = [utility_row(k, k) for k in range(K)]
        for k in range(K):
            for kp in range(K):
                if kp == k:
                    continue
                ub_rows.append(utility_row(k, kp) - truthful[k])
                ub_labels.append(("bic", i, k, kp))
        for k in range(K):
            ub_rows.append(-truthful[k])
            ub_labels.append(("ir", i, k))
    for i in range(n):
        for p in range(P):
            row = np.zeros(size)
            for side in (0, 1):
                for j in range(M):
                    row[col(side, i, j).start + p] = 1.0
            eq_rows.append(row)
            eq_labels.append(("outcome", i, tuple(profiles[p])))
    for p in range(P):
        row = np.zeros(size)
        for i in range(n):
            for j in range(M):
                row[col(1, i, j).start + p] = 1.0
        ub_rows.append(row)
        ub_labels.append(("item", tuple(profiles[p])))

    A_ub = np.array(ub_rows).reshape(-1, size)
    A_eq = np.array(eq_rows).reshape(-1, size)
    return LPModel(
        n, K, M, c,
        A_ub, np.where([lab[0] == "item" for lab in ub_labels], 1.0, 0.0).reshape(-1),
        A_eq, np.ones(len(eq_rows)),
        np.ones(size), ub_labels, eq_labels,
    )


def solve_lp(model: LPModel) -> LPSolution:
    res = linprog_max(model.c, model.A_ub, model.b_ub, model.A_eq, model.b_eq, model.upper)
    if res.status == "infeasible":
        # the null mechanism is always feasible, so this is a bug somewhere
        raise SolverError("revenue LP reported infeasible although the null mechanism is feasible")
    return LPSolution(res.status, res.objective, res.x, res.iterations)


@dataclass
class OracleResult:
    revenue: float
    mechanism: DirectMechanism
    iterations: int


def optimal_revenue_oracle(inst: Instance, tol: float = 1e-9) -> OracleResult:
    model = build_primal_lp(inst)
    sol = solve_lp(model)
    if sol.status != "optimal":
        raise SolverError(f"revenue LP ended with status {sol.status}")
    mech = model.tables(sol.y)
    # solver tolerances are ~1e-9 on scaled rows; re-check at a matching slack
    rep = check_mechanism(mech, inst, tol=max(tol, 1e-7))
    if not rep.ok:
        raise SolverError("LP optimum fails its own checks: " + "; ".join(rep.diagnostics[:5]))
    return OracleResult(sol.objective, mech, sol.iterations)
