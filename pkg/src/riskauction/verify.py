"""Primal checks on direct mechanisms and dual optimality certificates.

The primal side checks BIC, IR and feasibility of an ex-post table.  The
dual side builds explicit multipliers for the BIC (``lam``), IR (``mu``)
and feasibility (``nu``, ``gamma``) constraints of the revenue LP, then
re-checks every dual constraint at every grid payment.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    AssumptionError,
    DirectMechanism,
    Instance,
    UsageError,
    UtilityKindError,
    interim,
    profile_minus_weights,
)
from .virtual import iron, virtual_values_multi, virtual_values_single

DEFAULT_TOL = 1e-9
GAP_TOL = 1e-8


@dataclass
class VerificationReport:
    """Outcome of one or more checks.  Flags left as ``None`` were not run."""

    bic_ok: Optional[bool] = None
    ir_ok: Optional[bool] = None
    feasible_ok: Optional[bool] = None
    dual_ok: Optional[bool] = None
    worst_violation: float = 0.0
    revenue: Optional[float] = None
    diagnostics: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        flags = (self.bic_ok, self.ir_ok, self.feasible_ok, self.dual_ok)
        return all(f is not False for f in flags)

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        out = replace(self, diagnostics=list(self.diagnostics))
        for name in ("bic_ok", "ir_ok", "feasible_ok", "dual_ok"):
            if getattr(other, name) is not None:
                setattr(out, name, getattr(other, name))
        out.worst_violation = max(self.worst_violation, other.worst_violation)
        if other.revenue is not None:
            out.revenue = other.revenue
        out.diagnostics.extend(other.diagnostics)
        return out


def _interim_utilities(d: DirectMechanism, inst: Instance) -> np.ndarray:
    """``U[i, k, k']``: utility of a value-``v_k`` buyer reporting ``v_k'``."""
    im = interim(d, inst)
    z = inst.payments
    win = inst.u(inst.values[:, None] - z[None, :])  # (K, M)
    lose = inst.u(-z)  # (M,)
    # sum_j y1[i,k',j] u(v_k - z_j) + y0[i,k',j] u(-z_j)
    U = np.einsum("ipj,kj->ikp", im.y1, win) + (im.y0 @ lose)[:, None, :]
    return U


def check_bic(d: DirectMechanism, inst: Instance, tol: float = DEFAULT_TOL) -> VerificationReport:
    U = _interim_utilities(d, inst)
    truthful = np.einsum("ikk->ik", U)
    gain = U - truthful[:, :, None]  # misreport gain
    worst = float(max(0.0, gain.max()))
    rep = VerificationReport(bic_ok=worst <= tol, worst_violation=worst)
    for i, k, kp in zip(*np.nonzero(gain > tol)):
        rep.diagnostics.append(
            f"BIC: buyer {i} with value index {k} gains {gain[i, k, kp]:.3e} by reporting {kp}"
        )
    return rep


def check_ir(d: DirectMechanism, inst: Instance, tol: float = DEFAULT_TOL) -> VerificationReport:
    U = _interim_utilities(d, inst)
    truthful = np.einsum("ikk->ik", U)
    worst = float(max(0.0, -truthful.min()))
    rep = VerificationReport(ir_ok=worst <= tol, worst_violation=worst)
    for i, k in zip(*np.nonzero(truthful < -tol)):
        rep.diagnostics.append(f"IR: buyer {i} with value index {k} has utility {truthful[i, k]:.3e}")
    return rep


def check_feasibility(d: DirectMechanism, inst: Instance, tol: float = DEFAULT_TOL) -> VerificationReport:
    if not d.matches(inst):
        raise UsageError("mechanism dimensions do not match the instance")
    y0, y1 = d.y0, d.y1
    viol = []
    below = max(0.0, -float(min(y0.min(), y1.min())))
    above = max(0.0, float(max(y0.max(), y1.max())) - 1.0)
    viol.append(max(below, above))
    # each buyer's outcome distribution sums to one
    totals = y0.sum(axis=1) + y1.sum(axis=1)  # (n,) + (K,)*n
    dist = float(np.abs(totals - 1.0).max())
    viol.append(dist)
    # one item
    alloc = y1.sum(axis=(0, 1))
    item = max(0.0, float(alloc.max()) - 1.0)
    viol.append(item)
    worst = max(viol)
    rep = VerificationReport(feasible_ok=worst <= tol, worst_violation=worst)
    if viol[0] > tol:
        rep.diagnostics.append(f"feasibility: an entry lies outside [0, 1] by {viol[0]:.3e}")
    if dist > tol:
        rep.diagnostics.append(f"feasibility: an outcome distribution is off by {dist:.3e}")
    if item > tol:
        rep.diagnostics.append(f"feasibility: total allocation {1.0 + item:.6g} exceeds one item")
    return rep


def expected_revenue(d: DirectMechanism, inst: Instance) -> float:
    im = interim(d, inst)
    paid = (im.y0 + im.y1) @ inst.payments  # (n, K)
    return float((paid @ inst.pmf).sum())


def check_mechanism(d: DirectMechanism, inst: Instance, tol: float = DEFAULT_TOL) -> VerificationReport:
    """BIC, IR and feasibility together, plus expected revenue."""
    rep = check_feasibility(d, inst, tol).merge(check_bic(d, inst, tol)).merge(check_ir(d, inst, tol))
    rep.revenue = expected_revenue(d, inst)
    return rep


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Dual multipliers for the revenue LP.

    ``lam[i, k, k']`` prices the BIC constraint "type k does not mimic k'",
    ``mu[i, k]`` the IR constraint.  Single-buyer certificates have ``n = 1``,
    ``nu`` of shape ``(K,)`` and no ``gamma``; multi-buyer certificates have
    ``nu`` of shape ``(n,) + (K,)*n`` and ``gamma`` of shape ``(K,)*n``.
    ``loops`` lists ``(k0, k1, shift)``: ``Gamma_{k0}(0)`` was raised and
    ``Gamma_{k1}(0)`` lowered by ``shift``.
    """

    kind: str
    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    gamma: Optional[np.ndarray]
    objective: float
    loops: List[Tuple[int, int, float]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.lam.shape[0])


def gamma_fn(k: int, z: float, cert: DualCertificate, inst: Instance, i: int = 0) -> float:
    """Left side of the dual constraint attached to ``y1`` (allocated, pays ``z``)."""
    lam, v = cert.lam[i], inst.values
    out = inst.pmf[k] * z
    out += (lam[k, :].sum() + cert.mu[i, k]) * inst.u(v[k] - z)
    out -= float(np.dot(lam[:, k], inst.u(v - z)))
    return float(out)


def pi_fn(k: int, z: float, cert: DualCertificate, inst: Instance, i: int = 0) -> float:
    """Left side of the dual constraint attached to ``y0`` (not allocated, pays ``z``)."""
    lam = cert.lam[i]
    net = lam[k, :].sum() - lam[:, k].sum() + cert.mu[i, k]
    return float(inst.pmf[k] * z + net * inst.u(-z))


def shape_coefficients(k: int, cert: DualCertificate, inst: Instance, i: int = 0) -> Tuple[float, float]:
    """``(A_k, B_k)``: ``Pi`` has curvature sign ``A``, ``Gamma`` has sign ``B``."""
    lam, a, v = cert.lam[i], inst.utility.alpha, inst.values
    A = lam[k, :].sum() - lam[:, k].sum() + cert.mu[i, k]
    B = (lam[k, :].sum() + cert.mu[i, k]) * np.exp(a * v[k]) - float(np.dot(lam[:, k], np.exp(a * v)))
    return float(A), float(B)


def classify_dual_shape(k: int, cert: DualCertificate, inst: Instance, i: int = 0) -> Tuple[str, str]:
    """Shape of ``(Gamma_k, Pi_k)`` in ``z >= 0``: 'strongly_convex' or 'increasing'."""
    if not inst.utility.is_exponential:
        raise UtilityKindError("dual shape classification needs exponential utility")
    A, B = shape_coefficients(k, cert, inst, i)
    return (
        "strongly_convex" if B > 0 else "increasing",
        "strongly_convex" if A > 0 else "increasing",
    )


def _require_exponential(inst: Instance):
    if not inst.utility.is_exponential:
        raise UtilityKindError("dual certificates need exponential utility")


def _add_loops(lam, intervals, phi, phi_t, inst: Instance, shift_per_unit):
    """Forward pass over each ironed interval.

    The running surplus ``s_l = sum_{a<=m<=l} f_m (phi_m - phi~_m) z_M`` is moved
    from ``l`` to ``l + 1`` by a loop between the adjacent pair.
    ``shift_per_unit(k0, k1)`` returns ``(w0, w1, d)``: adding ``c*w0`` to
    ``lam[k0, k1]`` and ``c*w1`` to ``lam[k1, k0]`` moves ``c*d`` of
    ``Gamma(0)`` from ``k1`` to ``k0``.
    """
    f, zM = inst.pmf, inst.z_max
    loops = []
    for a, b in intervals:
        s = 0.0
        for l in range(a, b):
            s += f[l] * (phi[l] - phi_t[l]) * zM
            k0, k1 = l + 1, l
            w0, w1, d = shift_per_unit(k0, k1)
            c = s / d
            lam[k0, k1] += c * w0
            lam[k1, k0] += c * w1
            loops.append((k0, k1, float(s)))
    return loops


def build_dual_certificate_single(inst: Instance) -> DualCertificate:
    _require_exponential(inst)
    if inst.n != 1:
        raise UsageError("the single-buyer certificate needs n = 1")
    a, beta, zM, v = inst.utility.alpha, inst.utility.beta, inst.z_max, inst.values
    K = inst.K
    tail = -np.expm1(-a * zM)
    # u(v) - u(v - z_M) = beta e^{a v} (1 - e^{-a z_M})
    D = beta * np.exp(a * v) * tail
    S = inst.survival()
    lam = np.zeros((K, K))
    for k in range(1, K):
        lam[k, k - 1] = S[k] * zM / D[k]

    ironed = iron(virtual_values_single(inst), inst)
    r = -np.expm1(-a * v) / tail

    def per_unit(k0, k1):
        return 1.0 / D[k0], 1.0 / D[k1], r[k0] - r[k1]

    loops = _add_loops(lam, ironed.intervals, ironed.phi, ironed.phi_ironed, inst, per_unit)
    nu = np.maximum(0.0, inst.pmf * ironed.phi_ironed * zM)
    # the lowest type's "report below v_0" multiplier is its IR multiplier
    mu = np.zeros((1, K))
    mu[0, 0] = S[0] * zM / D[0]
    return DualCertificate("single", lam[None], mu, nu, None, float(nu.sum()), loops)


def build_dual_certificate_multi(inst: Instance) -> DualCertificate:
    _require_exponential(inst)
    if inst.n < 2:
        raise UsageError("the multi-buyer certificate needs n >= 2")
    from .mechanisms import check_assumption_A1

    report = check_assumption_A1(inst)
    if not report.ok:
        raise AssumptionError("assumption A1 fails; no multi-buyer certificate", report)
    n, K = inst.n, inst.K
    a, beta, zM, v = inst.utility.alpha, inst.utility.beta, inst.z_max, inst.values
    tail = -np.expm1(-a * zM)
    # e^{a v} / (u(v) - u(v - z_M)) = 1 / (beta (1 - e^{-a z_M}))
    D = beta * tail
    S = inst.survival()
    lam = np.zeros((K, K))
    for k in range(1, K):
        lam[k, k - 1] = S[k] * zM / D

    ironed = iron(virtual_values_multi(inst), inst)

    def per_unit(k0, k1):
        return 1.0 / D, 1.0 / D, (np.exp(a * v[k0]) - np.exp(a * v[k1])) / tail

    loops = _add_loops(lam, ironed.intervals, ironed.phi, ironed.phi_ironed, inst, per_unit)

    weights = inst.profile_weights()
    gamma = np.zeros((K,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = K
        term = weights * ironed.phi_ironed.reshape(shape) * zM
        gamma = np.maximum(gamma, term)
    nu = np.zeros((n,) + (K,) * n)
    lam_all = np.broadcast_to(lam, (n, K, K)).copy()
    mu = np.zeros((n, K))
    mu[:, 0] = S[0] * zM / D
    return DualCertificate("multi", lam_all, mu, nu, gamma, float(gamma.sum() + nu.sum()), loops)


def _dual_tables(cert: DualCertificate, inst: Instance, i: int):
    """``Gamma[k, j]`` and ``Pi[k, j]`` for buyer ``i`` over the whole grid."""
    lam, mu = cert.lam[i], cert.mu[i]
    v, z, f = inst.values, inst.payments, inst.pmf
    uvz = inst.u(v[:, None] - z[None, :])  # (K, M)
    out_w = lam.sum(axis=1) + mu
    G = f[:, None] * z[None, :] + out_w[:, None] * uvz - lam.T @ uvz
    net = out_w - lam.sum(axis=0)
    P = f[:, None] * z[None, :] + net[:, None] * inst.u(-z)[None, :]
    return G, P


def check_dual_feasibility(
    cert: DualCertificate, inst: Instance, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Evaluate every dual constraint at every grid payment."""
    n, K = inst.n, inst.K
    if cert.lam.shape != (n, K, K) or cert.mu.shape != (n, K):
        raise UsageError("certificate dimensions do not match the instance")
    rep = VerificationReport()
    worst = 0.0
    neg = min(float(cert.lam.min()), float(cert.mu.min()))
    if cert.gamma is not None:
        neg = min(neg, float(cert.gamma.min()))
    if neg < -tol:
        rep.diagnostics.append(f"dual: a multiplier is negative ({neg:.3e})")
    worst = max(worst, -neg)

    if cert.kind == "single":
        if n != 1 or cert.nu.shape != (K,):
            raise UsageError("single-buyer certificate on a multi-buyer instance")
        G, P = _dual_tables(cert, inst, 0)
        for name, table in (("Gamma", G), ("Pi", P)):
            excess = table - cert.nu[:, None]
            m = float(excess.max())
            worst = max(worst, m)
            for k, j in zip(*np.nonzero(excess > tol)):
                rep.diagnostics.append(
                    f"dual: {name}_{k}(z_{j}) exceeds nu_{k} by {excess[k, j]:.3e}"
                )
    else:
        if cert.nu.shape != (n,) + (K,) * n or cert.gamma is None:
            raise UsageError("multi-buyer certificate dimensions do not match the instance")
        for i in range(n):
            G, P = _dual_tables(cert, inst, i)
            fmi = profile_minus_weights(inst, i)
            # move axis i to the front so the own value indexes rows
            fmi_i = np.moveaxis(fmi, i, 0)
            nu_i = np.moveaxis(cert.nu[i], i, 0)
            gam_i = np.moveaxis(cert.gamma, i, 0)
            for j in range(inst.M):
                g_shape = (K,) + (1,) * (n - 1)
                ex_g = fmi_i * G[:, j].reshape(g_shape) - nu_i - gam_i
                ex_p = fmi_i * P[:, j].reshape(g_shape) - nu_i
                for name, ex in (("Gamma", ex_g), ("Pi", ex_p)):
                    m = float(ex.max())
                    worst = max(worst, m)
                    if m > tol:
                        idx = np.unravel_index(int(ex.argmax()), ex.shape)
                        rep.diagnostics.append(
                            f"dual: buyer {i} {name} at z_{j}, own index {idx[0]} "
                            f"exceeds its bound by {m:.3e}"
                        )
    if inst.utility.is_exponential:
        for i in range(n):
            for k in range(K):
                g, p = classify_dual_shape(k, cert, inst, i)
                rep.diagnostics.append(f"shape: buyer {i} index {k}: Gamma {g}, Pi {p}")
    rep.worst_violation = max(0.0, worst)
    rep.dual_ok = rep.worst_violation <= tol
    return rep


def duality_gap(cert: DualCertificate, mech_revenue: float) -> float:
    return float(cert.objective - mech_revenue)


def is_certified(cert: DualCertificate, inst: Instance, mech_revenue: float,
                 tol: float = DEFAULT_TOL, gap_tol: float = GAP_TOL) -> bool:
    return check_dual_feasibility(cert, inst, tol).dual_ok and abs(duality_gap(cert, mech_revenue)) <= gap_tol
