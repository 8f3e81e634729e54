"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 modelling assumption failed,
3 verification or optimality-gap failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import Any, Dict, List, Optional

from . import io
from .core import AssumptionError, DomainError, Instance, UsageError, UtilityKindError
from .instances import counterexample_instance, counterexample_menu
from .lp_oracle import SizeError, optimal_revenue_oracle
from .mechanisms import (
    loser_pay_auction,
    menu_mechanism_revenue,
    menu_utility,
    optimal_posted_price,
    to_direct,
)
from .simplex import SolverError
from .simulate import simulate_revenue
from .verify import (
    GAP_TOL,
    build_dual_certificate_multi,
    build_dual_certificate_single,
    check_dual_feasibility,
    check_mechanism,
    duality_gap,
)
from .virtual import VirtualValues, ironed_virtual_values, is_regular

EXIT_OK, EXIT_INPUT, EXIT_ASSUMPTION, EXIT_VERIFY = 0, 1, 2, 3
ORACLE_REL_TOL = 1e-7


class _Out:
    def __init__(self, json_only: bool):
        self.json_only = json_only

    def text(self, line: str = ""):
        if not self.json_only:
            print(line)

    def emit(self, payload: Dict[str, Any]):
        if self.json_only:
            print(io.dumps(payload))


def _a1_payload(report) -> List[Dict[str, Any]]:
    return [{"value": c.value, "lhs": c.lhs, "rhs": c.rhs, "ok": c.ok} for c in report.checks]


def _ironing_summary(inst: Instance) -> Optional[Dict[str, Any]]:
    try:
        iv = ironed_virtual_values(inst)
    except (UtilityKindError, UsageError):
        return None
    return {
        "kind": iv.kind,
        "phi": iv.phi,
        "phi_ironed": iv.phi_ironed,
        "regular": is_regular(VirtualValues(iv.kind, iv.phi, False)),
        "intervals": [list(t) for t in iv.intervals],
        "reserve_index": iv.reserve_index,
    }


def _closed_form(inst: Instance):
    if inst.n == 1:
        return optimal_posted_price(inst)
    return loser_pay_auction(inst)


def cmd_solve(args, out: _Out) -> int:
    inst = io.load_instance(args.instance)
    try:
        mech = _closed_form(inst)
    except AssumptionError as exc:
        out.text(f"assumption failure: {exc}")
        out.emit({"status": "assumption_failure", "message": str(exc), "A1": _a1_payload(exc.report)})
        return EXIT_ASSUMPTION
    mech_json = io.mechanism_to_dict(mech)
    summary = {"revenue": mech.revenue, "ironing": _ironing_summary(inst)}
    if args.out:
        io.write_json(args.out, mech_json)
    out.text(f"mechanism: {mech_json['type']}")
    out.text(f"revenue:   {mech.revenue:.10g}")
    iron = summary["ironing"]
    if iron is not None:
        out.text(f"reserve index: {iron['reserve_index']}  regular: {iron['regular']}  "
                 f"ironed intervals: {iron['intervals']}")
    if args.out:
        out.text(f"wrote {args.out}")
    elif not out.json_only:
        print(io.dumps(mech_json))
    out.emit({"status": "ok", "mechanism": mech_json, "summary": summary})
    return EXIT_OK


def _upper_bound(inst: Instance):
    """Certificate objective where one exists, otherwise the LP optimum."""
    if inst.utility.is_exponential:
        try:
            if inst.n == 1:
                cert = build_dual_certificate_single(inst)
            else:
                cert = build_dual_certificate_multi(inst)
            return "certificate", cert
        except AssumptionError:
            pass
    return "lp_oracle", optimal_revenue_oracle(inst)


def cmd_verify(args, out: _Out) -> int:
    inst = io.load_instance(args.instance)
    mech = io.load_mechanism(args.mechanism)
    try:
        d = to_direct(mech, inst)
    except UsageError as exc:
        raise io.InputError("mechanism", str(exc)) from None
    rep = check_mechanism(d, inst, args.tolerance)
    source, bound = _upper_bound(inst)
    payload: Dict[str, Any] = {
        "bic_ok": rep.bic_ok,
        "ir_ok": rep.ir_ok,
        "feasible_ok": rep.feasible_ok,
        "worst_violation": rep.worst_violation,
        "revenue": rep.revenue,
        "bound_source": source,
    }
    if source == "certificate":
        dual = check_dual_feasibility(bound, inst, args.tolerance)
        payload["certificate_feasible"] = dual.dual_ok
        payload["certificate_objective"] = bound.objective
        gap = duality_gap(bound, rep.revenue)
        bound_ok = bool(dual.dual_ok)
    else:
        payload["certificate_feasible"] = None
        payload["certificate_objective"] = None
        payload["oracle_revenue"] = bound.revenue
        gap = bound.revenue - rep.revenue
        bound_ok = True
    payload["gap"] = gap
    passed = rep.ok and bound_ok and abs(gap) <= GAP_TOL
    payload["verified"] = passed
    payload["diagnostics"] = list(rep.diagnostics)
    out.text(f"BIC: {rep.bic_ok}  IR: {rep.ir_ok}  feasible: {rep.feasible_ok}  "
             f"worst violation: {rep.worst_violation:.3e}")
    out.text(f"revenue: {rep.revenue:.10g}  bound ({source}): {rep.revenue + gap:.10g}  gap: {gap:.3e}")
    for line in rep.diagnostics:
        out.text(f"  {line}")
    out.text("verified" if passed else "NOT verified")
    out.emit(payload)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_oracle(args, out: _Out) -> int:
    inst = io.load_instance(args.instance)
    res = optimal_revenue_oracle(inst)
    payload: Dict[str, Any] = {"oracle_revenue": res.revenue, "iterations": res.iterations}
    closed = None
    try:
        closed = _closed_form(inst)
    except (AssumptionError, UtilityKindError):
        pass
    # equality is guaranteed only for exponential utility (and A1 when n >= 2)
    expected_equal = closed is not None and inst.utility.is_exponential
    matches = None
    if closed is not None:
        scale = max(1.0, abs(res.revenue))
        matches = abs(res.revenue - closed.revenue) <= ORACLE_REL_TOL * scale
        payload["closed_form_revenue"] = closed.revenue
    payload["matches_closed_form"] = matches
    payload["equality_expected"] = expected_equal
    out.text(f"oracle revenue: {res.revenue:.10g}")
    if closed is not None:
        out.text(f"closed form:    {closed.revenue:.10g}  match: {matches}")
    out.emit(payload)
    if expected_equal and not matches:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_iron(args, out: _Out) -> int:
    inst = io.load_instance(args.instance)
    summary = _ironing_summary(inst)
    if summary is None:
        raise io.InputError("utility", "virtual values need exponential utility (or linear with n = 1)")
    if out.json_only:
        out.emit(summary)
    else:
        print(io.dumps(summary))
    return EXIT_OK


def counterexample_report() -> Dict[str, Any]:
    inst = counterexample_instance()
    tioli = optimal_posted_price(inst)
    menu = menu_mechanism_revenue(counterexample_menu(), inst)
    opts = counterexample_menu()
    diff = [
        menu_utility(opts[1], inst.utility, inst.z_max, v) - menu_utility(opts[0], inst.utility, inst.z_max, v)
        for v in inst.values
    ]
    return {
        "tioli_revenue": tioli.revenue,
        "tioli_v_star": tioli.v_star,
        "tioli_p_high": tioli.p_high,
        "menu_options": [[o.x, o.w1, o.w0] for o in opts],
        "menu_revenue": menu.revenue,
        "choices": menu.choice,
        "option2_minus_option1": diff,
        "gap": menu.revenue - tioli.revenue,
    }


def cmd_counterexample(args, out: _Out) -> int:
    rep = counterexample_report()
    out.text(f"optimal randomized take-it-or-leave-it: v*={rep['tioli_v_star']:.1f} "
             f"p={rep['tioli_p_high']:.4f} revenue={rep['tioli_revenue']:.4f}")
    out.text(f"two-option menu revenue: {rep['menu_revenue']:.4f}")
    out.text("value  choice  U2-U1")
    for v, c, dd in zip(counterexample_instance().values, rep["choices"], rep["option2_minus_option1"]):
        label = "none" if c is None else str(c + 1)
        out.text(f"{v:5.1f}  {label:>6}  {dd:+.6f}")
    sign = "positive" if rep["gap"] > 0 else "non-positive"
    out.text(f"menu minus TIOLI: {rep['gap']:.6f} ({sign})")
    out.emit(rep)
    return EXIT_OK if rep["gap"] > 0 else EXIT_VERIFY


def cmd_simulate(args, out: _Out) -> int:
    inst = io.load_instance(args.instance)
    mech = io.load_mechanism(args.mechanism)
    try:
        d = to_direct(mech, inst)
    except UsageError as exc:
        raise io.InputError("mechanism", str(exc)) from None
    analytic = check_mechanism(d, inst).revenue
    res = simulate_revenue(mech, inst, args.samples, args.seed)
    ok = res.within(analytic)
    z = (res.mean - analytic) / res.std_error if res.std_error > 0 else 0.0
    payload = {
        "mean": res.mean,
        "std_error": res.std_error,
        "samples": res.samples,
        "seed": res.seed,
        "analytic_revenue": analytic,
        "z_score": z,
        "within_4se": ok,
        "rng": "numpy Philox, SeedSequence(seed).spawn per 100000-sample shard",
    }
    out.text(f"simulated revenue: {res.mean:.6f} +/- {res.std_error:.6f} (N={res.samples}, seed={res.seed})")
    out.text(f"analytic revenue:  {analytic:.6f}  z={z:+.2f}  within 4 SE: {ok}")
    out.emit(payload)
    return EXIT_OK if ok else EXIT_VERIFY


def _nonneg_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskauction",
        description="Optimal auctions for risk-loving buyers: solve, verify, cross-check.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output only")
    common.add_argument("--tolerance", type=float, default=1e-9, help="constraint slack (default 1e-9)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="construct the optimal mechanism")
    p.add_argument("--instance", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="check a mechanism and its optimality gap")
    p.add_argument("--instance", required=True)
    p.add_argument("--mechanism", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", parents=[common], help="solve the revenue LP directly")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("iron", parents=[common], help="print virtual values and ironing")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_iron)

    p = sub.add_parser("counterexample", parents=[common],
                       help="quadratic-utility instance where a two-option menu beats any single price")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo revenue estimate")
    p.add_argument("--instance", required=True)
    p.add_argument("--mechanism", required=True)
    p.add_argument("--samples", type=_nonneg_int, default=100_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out = _Out(getattr(args, "json", False))
    try:
        return args.func(args, out)
    except (io.InputError, DomainError, UtilityKindError, UsageError, SizeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        out.emit({"status": "input_error", "message": str(exc)})
        return EXIT_INPUT
    except AssumptionError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        out.emit({"status": "assumption_failure", "message": str(exc)})
        return EXIT_ASSUMPTION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        out.emit({"status": "solver_error", "message": str(exc)})
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
