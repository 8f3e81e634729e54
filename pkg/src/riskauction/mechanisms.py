"""Optimal mechanisms and menu evaluation.

Three representations are built here:

* :class:`PostedPriceMechanism` -- the randomized take-it-or-leave-it price
  that is optimal for one buyer with exponential utility;
* :class:`LoserPayMechanism` -- the ironed loser-pay auction for ``n >= 2``
  exponential buyers;
* :class:`MenuMechanism` -- an arbitrary single-buyer menu whose payment
  lotteries live on ``{0, z_max}``.

All three convert to ex-post tables with :func:`to_direct`.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    NULL_OPTION,
    AssumptionError,
    DirectMechanism,
    DomainError,
    Instance,
    MenuOption,
    UsageError,
    UtilityKindError,
    acceptance_ratio,
    eval_utility,
)
from .virtual import iron, tie_levels, virtual_values_multi

TIE_TOL = 1e-12
MENU_TIE_TOL = 1e-9


@dataclass(frozen=True)
class PostedPriceMechanism:
    v_star_index: int
    v_star: float
    p_high: float
    revenue: float


@dataclass(frozen=True, eq=False)
class LoserPayMechanism:
    n: int
    x: np.ndarray
    q: np.ndarray
    phi_ironed: np.ndarray
    reserve_index: Optional[int]
    revenue: float


@dataclass(frozen=True, eq=False)
class MenuMechanism:
    options: List[MenuOption]
    choice: List[Optional[int]]  # index into options per value, None = null option
    revenue: float

    def chosen(self, k: int) -> MenuOption:
        c = self.choice[k]
        return NULL_OPTION if c is None else self.options[c]


def _require_single(inst: Instance):
    if inst.n != 1:
        raise UsageError(f"this construction is for a single buyer, instance has n={inst.n}")


def posted_price_revenues(inst: Instance) -> np.ndarray:
    """Revenue of the best randomized price accepted by types ``>= v_k``, per k."""
    r = acceptance_ratio(inst.utility, inst.values, inst.z_max)
    return inst.z_max * inst.survival()[:-1] * r


def posted_price_revenue(inst: Instance, v: float) -> float:
    try:
        k = inst.value_index(v)
    except DomainError:
        raise DomainError(f"price threshold {v!r} is not in the value grid") from None
    return float(posted_price_revenues(inst)[k])


def optimal_posted_price(inst: Instance) -> PostedPriceMechanism:
    _require_single(inst)
    revs = posted_price_revenues(inst)
    best = float(revs.max())
    # ties go to the smallest threshold
    k = int(np.flatnonzero(revs >= best - TIE_TOL * max(1.0, abs(best)))[0])
    p_high = acceptance_ratio(inst.utility, inst.values[k], inst.z_max)
    return PostedPriceMechanism(k, float(inst.values[k]), float(p_high), float(revs[k]))


@dataclass(frozen=True)
class A1Check:
    value: float
    lhs: float
    rhs: float
    ok: bool


@dataclass(frozen=True)
class A1Report:
    checks: List[A1Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> List[A1Check]:
        return [c for c in self.checks if not c.ok]


def check_assumption_A1(inst: Instance) -> A1Report:
    """Bounded-transfer condition that keeps loser payment probabilities below 1."""
    if not inst.utility.is_exponential:
        raise UtilityKindError("assumption A1 is stated for exponential utility")
    a, n = inst.utility.alpha, inst.n
    rhs = float(-np.expm1(-a * inst.z_max))
    checks = []
    for v, f in zip(inst.values, inst.pmf):
        share = f / n
        lhs = float((1.0 - share) / share * np.expm1(a * v))
        checks.append(A1Check(float(v), lhs, rhs, lhs < rhs))
    return A1Report(checks)


def interim_allocation(levels: np.ndarray, pmf: np.ndarray, n: int, eligible: np.ndarray) -> np.ndarray:
    """Interim win probability when the highest level wins and ties split evenly.

    With ``a = Pr[opponent level < L]`` and ``b = Pr[opponent level == L]``,
    ``x = sum_m C(n-1, m) b^m a^(n-1-m) / (m + 1)``.
    """
    x = np.zeros(levels.size)
    for k in np.flatnonzero(eligible):
        a = pmf[levels < levels[k]].sum()
        b = pmf[levels == levels[k]].sum()
        x[k] = sum(
            math.comb(n - 1, m) * b**m * a ** (n - 1 - m) / (m + 1) for m in range(n)
        )
    return x


def loser_payment_probabilities(x, inst: Instance, reserve: Optional[int]) -> np.ndarray:
    """Sum form: ``q(k) = sum_{k*<=l<=k} (x(l) - x(l-1)) u(v_l) / (-u(-z)) / (1 - x(k))``."""
    q = np.zeros(inst.K)
    if reserve is None:
        return q
    ratio = inst.u(inst.values) / -inst.u(-inst.z_max)
    jumps = np.diff(np.concatenate([[0.0], x[reserve:]]))
    acc = np.cumsum(jumps * ratio[reserve:])
    q[reserve:] = acc / (1.0 - x[reserve:])
    return q


def loser_payment_probabilities_recursive(x, inst: Instance, reserve: Optional[int]) -> np.ndarray:
    """Recursive form: the bid-``k`` curve meets the bid-``(k-1)`` curve at ``v_k``."""
    q = np.zeros(inst.K)
    if reserve is None:
        return q
    u_loss = inst.u(-inst.z_max)
    prev_x, prev_q = 0.0, 0.0
    for k in range(reserve, inst.K):
        u_k = inst.u(inst.values[k])
        U_prev = prev_x * u_k + (1.0 - prev_x) * prev_q * u_loss
        q[k] = (x[k] * u_k - U_prev) / -u_loss / (1.0 - x[k])
        prev_x, prev_q = x[k], q[k]
    return q


def loser_pay_auction(inst: Instance) -> LoserPayMechanism:
    if inst.n < 2:
        raise UsageError("the loser-pay auction needs n >= 2 buyers")
    if not inst.utility.is_exponential:
        raise UtilityKindError("the loser-pay auction needs exponential utility")
    report = check_assumption_A1(inst)
    if not report.ok:
        bad = ", ".join(f"v={c.value:g} ({c.lhs:.6g} >= {c.rhs:.6g})" for c in report.failures)
        raise AssumptionError(f"assumption A1 fails at {bad}", report)

    ironed = iron(virtual_values_multi(inst), inst)
    phi_t = ironed.phi_ironed
    reserve = ironed.reserve_index
    eligible = phi_t > 1e-12
    x = interim_allocation(tie_levels(phi_t), inst.pmf, inst.n, eligible)
    q = loser_payment_probabilities(x, inst, reserve)
    revenue = inst.n * float(np.sum(inst.pmf * (1.0 - x) * q)) * inst.z_max
    return LoserPayMechanism(inst.n, x, q, phi_t, reserve, revenue)


def utility_curve(mech: LoserPayMechanism, inst: Instance, k: int, v: float) -> float:
    """Expected utility of bidding ``v_k`` with true value ``v``."""
    if not 0 <= k < inst.K:
        raise DomainError(f"bid index {k} out of range")
    return float(
        mech.x[k] * inst.u(v) + (1.0 - mech.x[k]) * mech.q[k] * inst.u(-inst.z_max)
    )


def menu_utility(option: MenuOption, u, z_max: float, v: float) -> float:
    win = option.w1 * eval_utility(u, v - z_max) + (1.0 - option.w1) * eval_utility(u, v)
    lose = option.w0 * eval_utility(u, -z_max)
    return float(option.x * win + (1.0 - option.x) * lose)


def menu_mechanism_revenue(options: Sequence[MenuOption], inst: Instance) -> MenuMechanism:
    """Let each type pick its favourite option (or the null option).

    Near-indifference (within 1e-9) is resolved toward the option with the
    larger expected payment.
    """
    _require_single(inst)
    options = list(options)
    candidates = [NULL_OPTION] + options
    pays = np.array([o.expected_payment(inst.z_max) for o in candidates])
    choice: List[Optional[int]] = []
    revenue = 0.0
    for k, v in enumerate(inst.values):
        utils = np.array([menu_utility(o, inst.utility, inst.z_max, v) for o in candidates])
        near = np.flatnonzero(utils >= utils.max() - MENU_TIE_TOL)
        best = int(near[np.argmax(pays[near])])
        choice.append(None if best == 0 else best - 1)
        revenue += inst.pmf[k] * pays[best]
    return MenuMechanism(options, choice, float(revenue))


@functools.singledispatch
def to_direct(mech, inst: Instance) -> DirectMechanism:
    """Expand a mechanism into ex-post ``y0``/``y1`` tables."""
    raise UsageError(f"cannot convert {type(mech).__name__} to a direct mechanism")


@to_direct.register
def _(mech: DirectMechanism, inst: Instance) -> DirectMechanism:
    if not mech.matches(inst):
        raise UsageError("direct mechanism dimensions do not match the instance")
    return mech


def _single_buyer_tables(inst: Instance, lotteries) -> DirectMechanism:
    # lotteries[k] = (x, w1, w0) on {0, z_max}
    M, K = inst.M, inst.K
    y0 = np.zeros((1, M, K))
    y1 = np.zeros((1, M, K))
    for k, (x, w1, w0) in enumerate(lotteries):
        y1[0, M - 1, k] = x * w1
        y1[0, 0, k] = x * (1.0 - w1)
        y0[0, M - 1, k] = (1.0 - x) * w0
        y0[0, 0, k] = (1.0 - x) * (1.0 - w0)
    return DirectMechanism(y0, y1)


@to_direct.register
def _(mech: PostedPriceMechanism, inst: Instance) -> DirectMechanism:
    _require_single(inst)
    if not (0 <= mech.v_star_index < inst.K and inst.values[mech.v_star_index] == mech.v_star):
        raise UsageError("posted price threshold does not belong to this instance")
    lotteries = [
        (1.0, mech.p_high, 0.0) if k >= mech.v_star_index else (0.0, 0.0, 0.0)
        for k in range(inst.K)
    ]
    return _single_buyer_tables(inst, lotteries)


@to_direct.register
def _(mech: MenuMechanism, inst: Instance) -> DirectMechanism:
    _require_single(inst)
    if len(mech.choice) != inst.K:
        raise UsageError("menu choices do not cover this instance's values")
    lotteries = []
    for k in range(inst.K):
        o = mech.chosen(k)
        lotteries.append((o.x, o.w1, o.w0))
    return _single_buyer_tables(inst, lotteries)


def allocation_shares(levels: np.ndarray, eligible: np.ndarray, profile) -> np.ndarray:
    """Each buyer's share of the item at one bid profile."""
    lv = np.array([levels[k] for k in profile])
    ok = np.array([eligible[k] for k in profile])
    shares = np.zeros(len(profile))
    if not ok.any():
        return shares
    top = lv[ok].max()
    winners = ok & (lv == top)
    shares[winners] = 1.0 / winners.sum()
    return shares


@to_direct.register
def _(mech: LoserPayMechanism, inst: Instance) -> DirectMechanism:
    n, K, M = inst.n, inst.K, inst.M
    if mech.n != n or mech.x.size != K:
        raise UsageError("loser-pay mechanism does not match the instance dimensions")
    levels = tie_levels(mech.phi_ironed)
    eligible = mech.phi_ironed > 1e-12
    shape = (n, M) + (K,) * n
    y0 = np.zeros(shape)
    y1 = np.zeros(shape)
    for profile in np.ndindex(*(K,) * n):
        shares = allocation_shares(levels, eligible, profile)
        for i, k in enumerate(profile):
            lose = 1.0 - shares[i]
            y1[(i, 0) + profile] = shares[i]
            y0[(i, M - 1) + profile] = lose * mech.q[k]
            y0[(i, 0) + profile] = lose * (1.0 - mech.q[k])
    return DirectMechanism(y0, y1)
