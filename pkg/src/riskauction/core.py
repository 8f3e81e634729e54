"""Domain types and utility evaluation.

Indices are 0-based throughout: value index ``k`` runs over ``range(K)`` and
payment index ``j`` over ``range(M)``.  ``values[0] == 0`` and
``payments[0] == 0`` always hold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9
PMF_TOL = 1e-12

KINDS = ("exponential", "linear", "quadratic")


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UtilityKindError(ValueError):
    """The operation is not defined for this kind of utility."""


class UsageError(ValueError):
    """Inputs are individually valid but do not fit together."""


class InvariantError(RuntimeError):
    """An internal invariant failed; indicates a bug, not bad input."""


class AssumptionError(ValueError):
    """A modelling assumption required by the construction does not hold.

    ``report`` carries the per-value diagnostics that triggered it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Utility:
    """A strictly increasing utility with ``u(0) = 0``.

    exponential: ``beta * (exp(alpha x) - 1)``
    linear:      ``slope * x``
    quadratic:   ``beta * ((x + L)^2 - L^2)``, valid for ``x >= -L``
    """

    kind: str
    alpha: float = 0.0
    beta: float = 1.0
    slope: float = 1.0
    L: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UtilityKindError(f"unknown utility kind {self.kind!r}")
        if self.kind == "exponential":
            _require_positive("alpha", self.alpha)
            _require_positive("beta", self.beta)
        elif self.kind == "linear":
            _require_positive("slope", self.slope)
        else:
            _require_positive("beta", self.beta)
            _require_positive("L", self.L)

    @classmethod
    def exponential(cls, alpha: float, beta: float = 1.0) -> "Utility":
        return cls("exponential", alpha=float(alpha), beta=float(beta))

    @classmethod
    def linear(cls, slope: float = 1.0) -> "Utility":
        return cls("linear", slope=float(slope))

    @classmethod
    def quadratic(cls, L: float, beta: float = 1.0) -> "Utility":
        return cls("quadratic", beta=float(beta), L=float(L))

    @property
    def is_exponential(self) -> bool:
        return self.kind == "exponential"

    def __call__(self, x):
        return eval_utility(self, x)


def _require_positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


def eval_utility(u: Utility, x):
    """Evaluate ``u`` at a scalar or array ``x``.

    The exponential form goes through ``expm1`` so tiny ``alpha * x`` keeps
    full relative precision and ``u(0)`` is exactly zero.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"utility argument must be finite, got {x!r}")
    if u.kind == "exponential":
        out = u.beta * np.expm1(u.alpha * arr)
    elif u.kind == "linear":
        out = u.slope * arr
    else:
        if np.any(arr < -u.L):
            raise DomainError(f"quadratic utility undefined below -L={-u.L}")
        out = u.beta * arr * (arr + 2.0 * u.L)
    if np.ndim(out) == 0:
        return float(out)
    return out


def acceptance_ratio(u: Utility, v, z_max: float):
    """Largest probability of charging ``z_max`` that a value-``v`` buyer accepts.

    Equals ``u(v) / (u(v) - u(v - z_max))``.  Accepts a scalar or an array of
    values.
    """
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0) or np.any(v_arr >= z_max):
        raise DomainError(f"need 0 <= v < z_max={z_max}, got {v!r}")
    if u.kind == "exponential":
        # algebraically (1 - e^{-a v}) / (1 - e^{-a z}); beta cancels
        out = np.expm1(-u.alpha * v_arr) / np.expm1(-u.alpha * z_max)
    else:
        top = eval_utility(u, v_arr)
        denom = top - eval_utility(u, v_arr - z_max)
        if np.any(denom <= 0):
            raise InvariantError("utility is not strictly increasing on [v - z_max, v]")
        out = top / denom
    out = np.where(v_arr == 0, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _as_readonly(values, name) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name}: expected a list of numbers") from exc
    if arr.size == 0:
        raise DomainError(f"{name}: must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """Complete problem input: value grid, pmf, payment grid, buyers, utility."""

    values: np.ndarray
    pmf: np.ndarray
    payments: np.ndarray
    n: int
    utility: Utility

    def __post_init__(self):
        values = _as_readonly(self.values, "values")
        pmf = _as_readonly(self.pmf, "pmf")
        payments = _as_readonly(self.payments, "payments")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "payments", payments)

        if values[0] != 0:
            raise DomainError("values: the first value must be 0")
        if np.any(np.diff(values) <= 0):
            raise DomainError("values: must be strictly increasing")
        if payments[0] != 0:
            raise DomainError("payments: the first payment must be 0")
        if np.any(np.diff(payments) <= 0):
            raise DomainError("payments: must be strictly increasing")
        if payments[-1] <= values[-1]:
            raise DomainError("payments: the largest payment must exceed the largest value")
        if pmf.size != values.size:
            raise DomainError(f"pmf: expected {values.size} entries, got {pmf.size}")
        if np.any(pmf <= 0):
            raise DomainError("pmf: every probability must be positive")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise DomainError(f"pmf: must sum to 1 (got {pmf.sum()!r})")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError(f"n: must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not isinstance(self.utility, Utility):
            raise DomainError("utility: expected a Utility")
        if self.utility.kind == "quadratic" and self.utility.L < payments[-1]:
            raise DomainError("utility: quadratic shift L must be at least the largest payment")

    @property
    def K(self) -> int:
        return int(self.values.size)

    @property
    def M(self) -> int:
        return int(self.payments.size)

    @property
    def z_max(self) -> float:
        return float(self.payments[-1])

    def survival(self) -> np.ndarray:
        """``S[k] = Pr[t >= v_k]``; has length ``K + 1`` with ``S[K] = 0``."""
        s = np.concatenate([np.cumsum(self.pmf[::-1])[::-1], [0.0]])
        return s

    def u(self, x):
        return eval_utility(self.utility, x)

    def value_index(self, v: float) -> int:
        """Index of ``v`` in the value grid (tolerance 1e-12)."""
        hits = np.flatnonzero(np.abs(self.values - v) <= 1e-12)
        if hits.size == 0:
            raise DomainError(f"{v!r} is not in the value grid")
        return int(hits[0])

    def with_payments(self, payments) -> "Instance":
        return Instance(self.values, self.pmf, payments, self.n, self.utility)

    def profile_weights(self) -> np.ndarray:
        """Joint pmf ``f(k_1) ... f(k_n)`` as an array of shape ``(K,) * n``."""
        w = np.ones(())
        for _ in range(self.n):
            w = np.multiply.outer(w, self.pmf)
        return w


@dataclass(frozen=True)
class MenuOption:
    """Allocate w.p. ``x``; charge ``z_max`` w.p. ``w1`` if allocated, ``w0`` if not."""

    x: float
    w1: float = 0.0
    w0: float = 0.0

    def __post_init__(self):
        for name in ("x", "w1", "w0"):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise DomainError(f"menu option {name} must lie in [0, 1], got {val!r}")

    def expected_payment(self, z_max: float) -> float:
        return z_max * (self.x * self.w1 + (1.0 - self.x) * self.w0)


NULL_OPTION = MenuOption(0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class DirectMechanism:
    """Ex-post outcome tables.

    ``y1[i, j, k_1, ..., k_n]`` is the probability that buyer ``i`` gets the
    item and pays ``z_j`` at profile ``(k_1, ..., k_n)``; ``y0`` the same for
    not getting the item.  Shape is ``(n, M) + (K,) * n``.  Only the shape is
    validated here; probabilistic consistency is the job of
    :func:`riskauction.verify.check_feasibility`.
    """

    y0: np.ndarray
    y1: np.ndarray

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float)
        y1 = np.array(self.y1, dtype=float)
        if y0.shape != y1.shape or y0.ndim < 3:
            raise UsageError(f"y0/y1 shapes {y0.shape} and {y1.shape} are not valid tables")
        n = y0.shape[0]
        if y0.ndim != 2 + n or len(set(y0.shape[2:])) != 1:
            raise UsageError(f"table shape {y0.shape} does not match (n, M) + (K,)*n")
        y0.setflags(write=False)
        y1.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y1", y1)

    @property
    def n(self) -> int:
        return int(self.y0.shape[0])

    @property
    def M(self) -> int:
        return int(self.y0.shape[1])

    @property
    def K(self) -> int:
        return int(self.y0.shape[2])

    def matches(self, inst: Instance) -> bool:
        return (self.n, self.M, self.K) == (inst.n, inst.M, inst.K)

    @classmethod
    def null(cls, inst: Instance) -> "DirectMechanism":
        shape = (inst.n, inst.M) + (inst.K,) * inst.n
        y0 = np.zeros(shape)
        y0[:, 0] = 1.0
        return cls(y0, np.zeros(shape))


@dataclass(frozen=True, eq=False)
class InterimMechanism:
    """Interim tables per buyer: ``y1[i, k, j]``, ``y0[i, k, j]``."""

    y0: np.ndarray
    y1: np.ndarray
    payments: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.y1.sum(axis=2)

    @property
    def p(self) -> np.ndarray:
        """Expected payment conditional on winning (0 where ``x == 0``)."""
        x = self.x
        paid = self.y1 @ self.payments
        return np.divide(paid, x, out=np.zeros_like(paid), where=x > 0)

    @property
    def q(self) -> np.ndarray:
        """Expected payment conditional on losing (0 where ``x == 1``)."""
        lose = 1.0 - self.x
        paid = self.y0 @ self.payments
        return np.divide(paid, lose, out=np.zeros_like(paid), where=lose > 0)


def interim(d: DirectMechanism, inst: Instance) -> InterimMechanism:
    """Average each buyer's ex-post tables over the other buyers' values."""
    if not d.matches(inst):
        raise UsageError(
            f"mechanism dimensions (n={d.n}, M={d.M}, K={d.K}) do not match "
            f"instance (n={inst.n}, M={inst.M}, K={inst.K})"
        )
    n = inst.n
    y0 = np.empty((n, inst.K, inst.M))
    y1 = np.empty((n, inst.K, inst.M))
    for i in range(n):
        y0[i] = _marginalize(d.y0[i], inst.pmf, i, n)
        y1[i] = _marginalize(d.y1[i], inst.pmf, i, n)
    return InterimMechanism(y0, y1, np.asarray(inst.payments))


def _marginalize(table: np.ndarray, pmf: np.ndarray, i: int, n: int) -> np.ndarray:
    # table: (M,) + (K,)*n  ->  (K, M), weighting every axis except i by pmf
    out = table
    for axis in reversed(range(n)):
        if axis == i:
            continue
        out = np.tensordot(out, pmf, axes=([1 + axis], [0]))
    # remaining axes: (M, K)
    return out.T


def profile_minus_weights(inst: Instance, i: int) -> np.ndarray:
    """``f(k_{-i})`` broadcast to shape ``(K,) * n`` (constant along axis ``i``)."""
    w = np.ones((1,) * inst.n)
    for axis in range(inst.n):
        if axis == i:
            continue
        shape = [1] * inst.n
        shape[axis] = inst.K
        w = w * inst.pmf.reshape(shape)
    return np.broadcast_to(w, (inst.K,) * inst.n)

