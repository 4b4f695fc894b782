"""JSON forms of polynomials and curves.

Complex numbers are ``[re, im]`` pairs or plain reals. A polynomial is either
``{"coeffs": [...]}`` (ascending powers) or ``{"roots": [...], "leading": z}``.
A curve is ``{"d": int, "phi": polynomial}`` plus optional ``"shifts"``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .curves import OffspringCurve, SimpleCurve
from .polycx import CPolynomial


class ConfigError(ValueError):
    """Bad configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_complex(value, key: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(key, "expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(key, "expected a number or [re, im]")


def parse_complex_list(value, key: str) -> list[complex]:
    if not isinstance(value, list):
        raise ConfigError(key, "expected a list")
    return [parse_complex(v, f"{key}[{i}]") for i, v in enumerate(value)]


def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def parse_polynomial(obj, key: str = "phi") -> CPolynomial:
    if not isinstance(obj, dict):
        raise ConfigError(key, "expected an object with 'coeffs' or 'roots'")
    unknown = set(obj) - {"coeffs", "roots", "leading"}
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    if "coeffs" in obj:
        if "roots" in obj:
            raise ConfigError(key, "give either 'coeffs' or 'roots', not both")
        c = parse_complex_list(obj["coeffs"], f"{key}.coeffs")
        if not c:
            raise ConfigError(f"{key}.coeffs", "must be nonempty")
        try:
            return CPolynomial(np.array(c, dtype=complex))
        except ValueError as exc:
            raise ConfigError(f"{key}.coeffs", str(exc)) from None
    if "roots" in obj:
        r = parse_complex_list(obj["roots"], f"{key}.roots")
        lead = parse_complex(obj.get("leading", 1.0), f"{key}.leading")
        try:
            return CPolynomial.from_roots(r, lead)
        except ValueError as exc:
            raise ConfigError(f"{key}.leading", str(exc)) from None
    raise ConfigError(key, "missing 'coeffs' or 'roots'")


def polynomial_to_json(p: CPolynomial) -> dict:
    return {"coeffs": [complex_to_json(c) for c in p.coeffs]}


def parse_curve(obj, key: str = "curve"):
    """``SimpleCurve`` or, when ``shifts`` is present, ``OffspringCurve``."""
    if not isinstance(obj, dict):
        raise ConfigError(key, "expected an object")
    unknown = set(obj) - {"d", "phi", "shifts"}
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    if "d" not in obj:
        raise ConfigError(f"{key}.d", "missing")
    d = obj["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 2:
        raise ConfigError(f"{key}.d", "must be an integer >= 2")
    if "phi" not in obj:
        raise ConfigError(f"{key}.phi", "missing")
    base = SimpleCurve(d, parse_polynomial(obj["phi"], f"{key}.phi"))
    if "shifts" not in obj:
        return base
    shifts = parse_complex_list(obj["shifts"], f"{key}.shifts")
    try:
        return OffspringCurve(base, tuple(shifts))
    except ValueError as exc:
        raise ConfigError(f"{key}.shifts", str(exc)) from None


def curve_to_json(c) -> dict:
    if isinstance(c, OffspringCurve):
        out = curve_to_json(c.base)
        out["shifts"] = [complex_to_json(b) for b in c.shifts]
        return out
    return {"d": c.d, "phi": polynomial_to_json(c.phi)}


def load_json(path, key: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(key, f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(key, f"invalid JSON in {path} (line {exc.lineno}): {exc.msg}") from None
