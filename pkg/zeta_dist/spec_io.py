"""
ProductSpec serialization.

The normative format is a JSON document:

    {
      "d": 1,
      "directions": [["1"], ["2"]],
      "tuple_size": 1,
      "coefficients": [[{"kind": "character", "modulus": 4, "values": [0, 1, 0, -1]}],
                       [{"kind": "constant", "value": 1}]],
      "direction_mode_hint": null
    }

Rationals are integers or strings such as "3/2" or "0.5". YAML files with the
same structure are accepted too (.yaml / .yml).
"""

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from zeta_dist.arith import RealCharacter
from zeta_dist.errors import SpecValidationError
from zeta_dist.product import (
    CoefficientScheme,
    DirectionHint,
    DirectionMode,
    ProductSpec,
    SchemeKind,
)

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("d", "directions", "tuple_size", "coefficients")


def parse_rational(value: Any, path: str) -> Fraction:
    """Integer, "p/q" string or decimal literal as an exact Fraction."""
    if isinstance(value, bool):
        raise _violation(path, f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # decimal literal as written, not its binary64 expansion
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise _violation(path, f"cannot parse rational {value!r}")
    raise _violation(path, f"expected a rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> Any:
    return value.numerator if value.denominator == 1 else str(value)


def _violation(path: str, message: str, recommendation: str = "Fix the spec file") -> SpecValidationError:
    return SpecValidationError(
        [{"field": path, "message": message, "recommendation": recommendation}]
    )


def _parse_int(value: Any, path: str) -> int:
    if isinstance(value, bool):
        raise _violation(path, f"expected an integer, got {value!r}")
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise _violation(path, f"expected an integer, got {value!r}") from None
    if isinstance(value, float) and out != value:
        raise _violation(path, f"expected an integer, got {value!r}")
    return out


def scheme_from_dict(data: Any, path: str) -> CoefficientScheme:
    if not isinstance(data, dict) or "kind" not in data:
        raise _violation(path, "scheme must be an object with a 'kind'",
                         "Use constant, character, table or prime_power")
    kind = data["kind"]
    if kind == SchemeKind.CONSTANT.value:
        return CoefficientScheme.constant(parse_rational(data.get("value"), f"{path}.value"))
    if kind == SchemeKind.CHARACTER.value:
        missing = [key for key in ("modulus", "values") if key not in data]
        if missing:
            raise _violation(path, f"character scheme missing {missing[0]!r}")
        values = data["values"]
        if not isinstance(values, list):
            raise _violation(f"{path}.values", "values must be a list of -1, 0, 1")
        modulus = _parse_int(data["modulus"], f"{path}.modulus")
        residues = tuple(_parse_int(v, f"{path}.values[{i}]") for i, v in enumerate(values))
        try:
            chi = RealCharacter(modulus, residues)
        except SpecValidationError as exc:
            for item in exc.violations:
                item["field"] = path
            raise
        return CoefficientScheme.from_character(chi)
    if kind == SchemeKind.TABLE.value:
        overrides = data.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise _violation(f"{path}.overrides", "overrides must map primes to values")
        table = {
            _parse_int(p, f"{path}.overrides[{p}]"): parse_rational(v, f"{path}.overrides[{p}]")
            for p, v in overrides.items()
        }
        return CoefficientScheme.table(parse_rational(data.get("default"), f"{path}.default"), table)
    if kind == SchemeKind.PRIME_POWER.value:
        return CoefficientScheme.prime_power(parse_rational(data.get("shift"), f"{path}.shift"))
    raise _violation(f"{path}.kind", f"unknown scheme kind {kind!r}",
                     "Use constant, character, table or prime_power")


def scheme_to_dict(scheme: CoefficientScheme) -> Dict[str, Any]:
    if scheme.kind is SchemeKind.CONSTANT:
        return {"kind": "constant", "value": format_rational(scheme.value)}
    if scheme.kind is SchemeKind.CHARACTER:
        assert scheme.character is not None
        return {"kind": "character", **scheme.character.to_dict()}
    if scheme.kind is SchemeKind.TABLE:
        return {
            "kind": "table",
            "default": format_rational(scheme.value),
            "overrides": {str(p): format_rational(v) for p, v in scheme.overrides},
        }
    return {"kind": "prime_power", "shift": format_rational(scheme.shift)}


def hint_from_dict(data: Any) -> Optional[DirectionHint]:
    if data is None or data == "None":
        return None
    if isinstance(data, str):
        data = {"mode": data}
    if not isinstance(data, dict):
        raise _violation("direction_mode_hint", "hint must be null, a mode or an object")
    try:
        mode = DirectionMode(data.get("mode", "None"))
    except ValueError:
        raise _violation("direction_mode_hint.mode", f"unknown mode {data.get('mode')!r}",
                         "Use LI, LR or None")
    literals = tuple(str(x) for x in data.get("psi", []))
    psi = tuple(parse_rational(x, f"direction_mode_hint.psi[{i}]") for i, x in enumerate(literals))
    return DirectionHint(mode=mode, psi=psi, psi_literals=literals, note=str(data.get("note", "")))


def hint_to_dict(hint: Optional[DirectionHint]) -> Optional[Dict[str, Any]]:
    if hint is None:
        return None
    out: Dict[str, Any] = {"mode": hint.mode.value}
    if hint.psi_literals:
        out["psi"] = list(hint.psi_literals)
    if hint.note:
        out["note"] = hint.note
    return out


def spec_from_dict(data: Any) -> ProductSpec:
    """Build a ProductSpec from parsed JSON/YAML; shape errors raise SpecValidationError."""
    if not isinstance(data, dict):
        raise _violation("<root>", "spec document must be an object")
    missing = [name for name in REQUIRED_FIELDS if name not in data]
    if missing:
        raise SpecValidationError(
            [{"field": name, "message": "missing field", "recommendation": f"Add '{name}'"}
             for name in missing]
        )

    directions_raw = data["directions"]
    coefficients_raw = data["coefficients"]
    if not isinstance(directions_raw, list) or not all(isinstance(a, list) for a in directions_raw):
        raise _violation("directions", "directions must be an array of arrays")
    if not isinstance(coefficients_raw, list) or not all(
        isinstance(row, list) for row in coefficients_raw
    ):
        raise _violation("coefficients", "coefficients must be an array of arrays")

    directions = tuple(
        tuple(parse_rational(x, f"directions[{l}][{j}]") for j, x in enumerate(a))
        for l, a in enumerate(directions_raw)
    )
    coefficients = tuple(
        tuple(scheme_from_dict(s, f"coefficients[{l}][{k}]") for k, s in enumerate(row))
        for l, row in enumerate(coefficients_raw)
    )
    return ProductSpec(
        d=data["d"],
        directions=directions,
        tuple_size=data["tuple_size"],
        coefficients=coefficients,
        direction_mode_hint=hint_from_dict(data.get("direction_mode_hint")),
        name=str(data.get("name", "")),
    )


def spec_to_dict(spec: ProductSpec) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "d": spec.d,
        "directions": [[format_rational(x) for x in a] for a in spec.directions],
        "tuple_size": spec.tuple_size,
        "coefficients": [[scheme_to_dict(s) for s in row] for row in spec.coefficients],
        "direction_mode_hint": hint_to_dict(spec.direction_mode_hint),
    }
    if spec.name:
        out["name"] = spec.name
    return out


def load_spec(path: Path) -> ProductSpec:
    """Read a spec file (JSON, or YAML by suffix)."""
    if not path.exists():
        raise _violation("spec", f"spec file not found: {path}", "Check the --spec path")
    text = path.read_text()
    try:
        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise _violation("spec", f"cannot parse {path}: {exc}")
    spec = spec_from_dict(data)
    if not spec.name:
        spec = ProductSpec(spec.d, spec.directions, spec.tuple_size, spec.coefficients,
                           spec.direction_mode_hint, name=path.stem)
    logger.info("Loaded spec %s (d=%s, phi=%d)", spec.name, spec.d, spec.phi)
    return spec


def dump_spec(spec: ProductSpec, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


def dumps_spec(spec: ProductSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)
