"""Virtual values for risk-loving buyers, regularity, and ironing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import Instance, UsageError, UtilityKindError, acceptance_ratio

REGULAR_TOL = 1e-12
RESERVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VirtualValues:
    kind: str  # "single" or "multi"
    phi: np.ndarray
    regular: bool


@dataclass(frozen=True, eq=False)
class IronedVirtualValues:
    kind: str
    phi: np.ndarray
    phi_ironed: np.ndarray
    intervals: List[Tuple[int, int]]  # inclusive, 0-based
    reserve_index: Optional[int]

    def as_virtual(self) -> VirtualValues:
        return VirtualValues(self.kind, self.phi_ironed, _strictly_increasing(self.phi_ironed))


def _strictly_increasing(phi) -> bool:
    return bool(np.all(np.diff(phi) > REGULAR_TOL))


def is_regular(vv: VirtualValues) -> bool:
    return _strictly_increasing(vv.phi)


def revenue_terms_single(inst: Instance) -> np.ndarray:
    """``T[k] = Pr[t >= v_k] * r(v_k)`` with a trailing zero (length K + 1).

    ``z_max * T[k]`` is the revenue of the best randomized price accepted by
    exactly the types ``>= v_k``.
    """
    r = acceptance_ratio(inst.utility, inst.values, inst.z_max)
    S = inst.survival()
    return np.concatenate([S[:-1] * r, [0.0]])


def revenue_terms_multi(inst: Instance) -> np.ndarray:
    """``T[k] = Pr[t >= v_k] * e^{alpha v_k} r(v_k)`` with a trailing zero."""
    a = inst.utility.alpha
    # e^{a v} (1 - e^{-a v}) / (1 - e^{-a z}) = (e^{a v} - 1) / (1 - e^{-a z})
    boosted = np.expm1(a * inst.values) / -np.expm1(-a * inst.z_max)
    S = inst.survival()
    return np.concatenate([S[:-1] * boosted, [0.0]])


def virtual_values_single(inst: Instance) -> VirtualValues:
    if inst.utility.kind not in ("exponential", "linear"):
        raise UtilityKindError(
            f"single-buyer virtual values need exponential or linear utility, not {inst.utility.kind}"
        )
    T = revenue_terms_single(inst)
    phi = (T[:-1] - T[1:]) / inst.pmf
    return VirtualValues("single", phi, _strictly_increasing(phi))


def virtual_values_multi(inst: Instance) -> VirtualValues:
    if inst.n < 2:
        raise UsageError("multi-buyer virtual values need n >= 2")
    if not inst.utility.is_exponential:
        raise UtilityKindError("multi-buyer virtual values need exponential utility")
    T = revenue_terms_multi(inst)
    phi = (T[:-1] - T[1:]) / inst.pmf
    return VirtualValues("multi", phi, _strictly_increasing(phi))


def virtual_values(inst: Instance) -> VirtualValues:
    """Single-buyer values for ``n == 1``, multi-buyer values otherwise."""
    if inst.n == 1:
        return virtual_values_single(inst)
    return virtual_values_multi(inst)


def _lower_hull(xs, ys, tol):
    # Monotone chain over points already sorted by x.  A middle point is
    # dropped only when it lies strictly above the chord, so collinear points
    # stay as vertices and never form an ironing interval.
    hull = [0]
    for idx in range(1, len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (ys[idx] - ys[a]) - (xs[idx] - xs[a]) * (ys[b] - ys[a])
            if cross < -tol:
                hull.pop()
            else:
                break
        hull.append(idx)
    return hull


def iron(vv: VirtualValues, inst: Instance) -> IronedVirtualValues:
    """Iron ``vv`` by convexifying its probability-weighted cumulative curve.

    The curve is ``G(k) = sum_{l<k} f_l phi_l`` against ``F(k) = sum_{l<k} f_l``
    for ``k = 0..K``.  Each hull segment that skips points becomes an ironing
    interval whose value is the f-weighted average of ``phi`` over it.
    """
    phi = np.asarray(vv.phi, dtype=float)
    f = inst.pmf
    if phi.size != f.size:
        raise UsageError(f"virtual values have {phi.size} entries, instance has K={f.size}")
    F = np.concatenate([[0.0], np.cumsum(f)])
    G = np.concatenate([[0.0], np.cumsum(f * phi)])
    scale = max(1.0, float(np.max(np.abs(G))))
    hull = _lower_hull(F, G, tol=1e-13 * scale)

    ironed = phi.copy()
    intervals = []
    for a, b in zip(hull[:-1], hull[1:]):
        if b - a > 1:
            # points a..b on the curve cover steps a..b-1
            lo, hi = a, b - 1
            avg = float(np.dot(f[lo : hi + 1], phi[lo : hi + 1]) / f[lo : hi + 1].sum())
            ironed[lo : hi + 1] = avg
            intervals.append((lo, hi))
    positive = np.flatnonzero(ironed > RESERVE_TOL)
    reserve = int(positive[0]) if positive.size else None
    return IronedVirtualValues(vv.kind, phi, ironed, intervals, reserve)


def ironed_virtual_values(inst: Instance) -> IronedVirtualValues:
    return iron(virtual_values(inst), inst)


def tie_levels(phi_ironed: np.ndarray, tol: float = REGULAR_TOL) -> np.ndarray:
    """Rank of each (non-decreasing) ironed value; equal ranks are ties."""
    levels = np.zeros(phi_ironed.size, dtype=int)
    for k in range(1, phi_ironed.size):
        gap = phi_ironed[k] - phi_ironed[k - 1]
        levels[k] = levels[k - 1] + (1 if gap > tol * max(1.0, abs(phi_ironed[k])) else 0)
    return levels
