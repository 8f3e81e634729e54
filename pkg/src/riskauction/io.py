"""JSON reading and writing for instances, mechanisms and reports.

Floats are written with Python's shortest round-trip ``repr``, so every
number reads back bit-for-bit.
"""
from __future__ import annotations

import json
import math
from typing import Any, Dict

import numpy as np

from .core import DirectMechanism, DomainError, Instance, MenuOption, Utility, UtilityKindError
from .mechanisms import LoserPayMechanism, MenuMechanism, PostedPriceMechanism


class InputError(ValueError):
    """Malformed input file; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _number_list(obj, field):
    if not isinstance(obj, list) or not obj:
        raise InputError(field, "expected a non-empty array of numbers")
    out = []
    for idx, x in enumerate(obj):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise InputError(f"{field}[{idx}]", f"expected a finite number, got {x!r}")
        out.append(float(x))
    return out


def _number(obj, field):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)) or not math.isfinite(obj):
        raise InputError(field, f"expected a finite number, got {obj!r}")
    return float(obj)


def parse_utility(obj, default_beta: float = 1.0) -> Utility:
    if not isinstance(obj, dict):
        raise InputError("utility", "expected an object with a 'kind' key")
    kind = obj.get("kind")
    beta = _number(obj.get("beta", default_beta), "utility.beta")
    try:
        if kind == "exponential":
            if "alpha" not in obj:
                raise InputError("utility.alpha", "required for exponential utility")
            return Utility.exponential(_number(obj["alpha"], "utility.alpha"), beta)
        if kind == "linear":
            return Utility.linear(_number(obj.get("slope", 1.0), "utility.slope"))
        if kind == "quadratic":
            if "L" not in obj:
                raise InputError("utility.L", "required for quadratic utility")
            return Utility.quadratic(_number(obj["L"], "utility.L"), beta)
    except (DomainError, UtilityKindError) as exc:
        raise InputError("utility", str(exc)) from None
    raise InputError("utility.kind", f"expected exponential, linear or quadratic, got {kind!r}")


def parse_instance(obj: Dict[str, Any]) -> Instance:
    if not isinstance(obj, dict):
        raise InputError("instance", "expected a JSON object")
    for key in ("values", "pmf", "n", "utility"):
        if key not in obj:
            raise InputError(key, "missing")
    values = _number_list(obj["values"], "values")
    pmf = _number_list(obj["pmf"], "pmf")
    if "payments" in obj:
        payments = _number_list(obj["payments"], "payments")
    elif "z_max" in obj:
        z_max = _number(obj["z_max"], "z_max")
        size = obj.get("grid_size", 2)
        if isinstance(size, bool) or not isinstance(size, int) or size < 2:
            raise InputError("grid_size", f"expected an integer >= 2, got {size!r}")
        payments = list(np.linspace(0.0, z_max, size))
    else:
        raise InputError("payments", "missing (give 'payments' or 'z_max' with optional 'grid_size')")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("n", f"expected an integer >= 1, got {n!r}")
    utility = parse_utility(obj["utility"], _number(obj.get("beta", 1.0), "beta"))
    try:
        return Instance(values, pmf, payments, n, utility)
    except DomainError as exc:
        msg = str(exc)
        field = msg.split(":", 1)[0] if ":" in msg else "instance"
        raise InputError(field, msg.split(":", 1)[-1].strip()) from None


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    u = inst.utility
    if u.kind == "exponential":
        ud = {"kind": "exponential", "alpha": u.alpha, "beta": u.beta}
    elif u.kind == "linear":
        ud = {"kind": "linear", "slope": u.slope}
    else:
        ud = {"kind": "quadratic", "L": u.L, "beta": u.beta}
    return {
        "values": inst.values.tolist(),
        "pmf": inst.pmf.tolist(),
        "payments": inst.payments.tolist(),
        "n": inst.n,
        "utility": ud,
    }


def mechanism_to_dict(mech) -> Dict[str, Any]:
    if isinstance(mech, PostedPriceMechanism):
        return {
            "type": "posted_price",
            "v_star_index": mech.v_star_index,
            "v_star": mech.v_star,
            "p_high": mech.p_high,
            "revenue": mech.revenue,
        }
    if isinstance(mech, LoserPayMechanism):
        return {
            "type": "loser_pay",
            "n": mech.n,
            "x": mech.x.tolist(),
            "q": mech.q.tolist(),
            "phi_ironed": mech.phi_ironed.tolist(),
            "reserve_index": mech.reserve_index,
            "revenue": mech.revenue,
        }
    if isinstance(mech, MenuMechanism):
        return {
            "type": "menu",
            "options": [[o.x, o.w1, o.w0] for o in mech.options],
            "choice": list(mech.choice),
            "revenue": mech.revenue,
        }
    if isinstance(mech, DirectMechanism):
        return {"type": "direct", "y0": mech.y0.tolist(), "y1": mech.y1.tolist()}
    raise TypeError(f"cannot serialize {type(mech).__name__}")


def _int_or_none(x, field):
    if x is None:
        return None
    if isinstance(x, bool) or not isinstance(x, int):
        raise InputError(field, f"expected an integer or null, got {x!r}")
    return x


def mechanism_from_dict(obj: Dict[str, Any]):
    if not isinstance(obj, dict) or "type" not in obj:
        raise InputError("type", "mechanism files need a 'type' field")
    kind = obj["type"]
    try:
        if kind == "posted_price":
            return PostedPriceMechanism(
                _int_or_none(obj["v_star_index"], "v_star_index"),
                _number(obj["v_star"], "v_star"),
                _number(obj["p_high"], "p_high"),
                _number(obj["revenue"], "revenue"),
            )
        if kind == "loser_pay":
            return LoserPayMechanism(
                obj["n"],
                np.array(_number_list(obj["x"], "x")),
                np.array(_number_list(obj["q"], "q")),
                np.array(_number_list(obj["phi_ironed"], "phi_ironed")),
                _int_or_none(obj.get("reserve_index"), "reserve_index"),
                _number(obj["revenue"], "revenue"),
            )
        if kind == "menu":
            opts = []
            for idx, o in enumerate(obj["options"]):
                vals = _number_list(o, f"options[{idx}]")
                if len(vals) != 3:
                    raise InputError(f"options[{idx}]", "expected [x, w1, w0]")
                opts.append(MenuOption(*vals))
            choice = [_int_or_none(c, f"choice[{i}]") for i, c in enumerate(obj["choice"])]
            for i, c in enumerate(choice):
                if c is not None and not 0 <= c < len(opts):
                    raise InputError(f"choice[{i}]", f"option index {c} out of range")
            return MenuMechanism(opts, choice, _number(obj["revenue"], "revenue"))
        if kind == "direct":
            y0 = np.array(obj["y0"], dtype=float)
            y1 = np.array(obj["y1"], dtype=float)
            if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(y1))):
                raise InputError("y0/y1", "entries must be finite")
            return DirectMechanism(y0, y1)
    except KeyError as exc:
        raise InputError(str(exc.args[0]), "missing") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(kind, str(exc)) from None
    raise InputError("type", f"unknown mechanism type {kind!r}")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_default, allow_nan=False)


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(path, f"cannot read file ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise InputError(path, f"invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_instance(path: str) -> Instance:
    return parse_instance(read_json(path))


def load_mechanism(path: str):
    return mechanism_from_dict(read_json(path))


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")
