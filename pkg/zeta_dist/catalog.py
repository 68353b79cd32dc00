"""
Named, pre-validated Euler products.

Usage:
    from zeta_dist import catalog

    catalog.list_names()
    entry = catalog.get("dedekind_qi")
    entry.closed_form_atoms(5, 1, 2.0)      # 2 * 5^-2
    catalog.get("rank_shift", alpha="1/3")

Every entry records the verdict of the sign theorems (`theorem_verdict`), the
expected atom certificate for out-of-scope entries, and the final law
(`expected_classification`): CompoundPoisson, or NotCharacteristic when a
negative atom or a witness disproves it.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from zeta_dist.arith import RealCharacter, char_value
from zeta_dist.classify import CertificateStatus, Verdict
from zeta_dist.errors import CatalogLookupError, DomainError, SpecValidationError
from zeta_dist.levy import atom_weight
from zeta_dist.product import CoefficientScheme, ProductSpec, validate
from zeta_dist.spec_io import parse_rational

logger = logging.getLogger(__name__)

ClosedForm = Callable[[int, int, float], float]

CP = Verdict.COMPOUND_POISSON
NOT_CF = Verdict.NOT_CHARACTERISTIC
OOTS = Verdict.OUT_OF_THEOREM_SCOPE

CHI4 = RealCharacter.chi4()
ONE = CoefficientScheme.constant(1)
ZERO = CoefficientScheme.constant(0)
L_CHI4 = CoefficientScheme.from_character(CHI4)
# L_1: -1 at p = 2, L_2: -1 at p = 3, 1 elsewhere
L_M = {
    1: CoefficientScheme.table(1, {2: -1}),
    2: CoefficientScheme.table(1, {3: -1}),
}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec: ProductSpec
    expected_classification: Verdict
    theorem_verdict: Verdict
    default_sigma: Tuple[float, ...]
    description: str
    certificate: Optional[CertificateStatus] = None
    closed_form_atoms: Optional[ClosedForm] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "d": self.spec.d,
            "expected_classification": self.expected_classification.value,
            "theorem_verdict": self.theorem_verdict.value,
            "certificate": None if self.certificate is None else self.certificate.value,
            "default_sigma": list(self.default_sigma),
            "closed_form_atoms": self.closed_form_atoms is not None,
            "params": {k: str(v) for k, v in self.params.items()},
        }


def _spec(name: str, d: int, directions, rows, tuple_size: Optional[int] = None) -> ProductSpec:
    eta = tuple_size if tuple_size is not None else len(rows[0])
    return ProductSpec(
        d=d,
        directions=tuple(tuple(Fraction(x) for x in a) for a in directions),
        tuple_size=eta,
        coefficients=tuple(tuple(row) for row in rows),
        name=name,
    )


def _dedekind_qi_mass(p: int, r: int, sigma: float) -> float:
    """(1 + chi_4(p)^r) / r * p^{-r sigma}."""
    coefficient = Fraction(1 + char_value(CHI4, p) ** r, r)
    return float(coefficient) * atom_weight(p, r * Fraction(sigma))


def _zeta2_l2s_mass(p: int, j: int, sigma: float) -> float:
    """Mass at j log p: 2/j for odd j, (1 + chi_4(p)^k)/k for j = 2k."""
    if j % 2:
        coefficient = Fraction(2, j)
    else:
        k = j // 2
        coefficient = Fraction(1 + char_value(CHI4, p) ** k, k)
    return float(coefficient) * atom_weight(p, j * Fraction(sigma))


def _int_param(params: Dict[str, Any], key: str, default: int, allowed: Tuple[int, ...]) -> int:
    raw = params.pop(key, default)
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise DomainError(f"parameter {key} must be an integer, got {raw!r}", {key: raw})
    if value not in allowed:
        raise DomainError(f"parameter {key} must be one of {allowed}, got {value}", {key: value})
    return value


def _riemann(params) -> CatalogEntry:
    return CatalogEntry(
        "riemann", _spec("riemann", 1, [[1]], [[ONE]]), CP, CP, (2.0,), "zeta(s)"
    )


def _zeta_2s(params) -> CatalogEntry:
    shape = params.pop("shape", "direct")
    if shape == "direct":
        spec = _spec("zeta_2s", 1, [[2]], [[ONE]])
    elif shape == "split":
        spec = _spec("zeta_2s", 1, [[1]], [[ONE, CoefficientScheme.constant(-1)]])
    else:
        raise DomainError(f"zeta_2s shape must be direct or split, got {shape!r}",
                          {"shape": shape})
    return CatalogEntry(
        "zeta_2s", spec, CP, CP, (2.0,),
        "zeta(2s) as a = 2 (direct) or as (1 - p^-s)^-1 (1 + p^-s)^-1 (split)",
        params={"shape": shape},
    )


def _zeta2s_over_zeta(params) -> CatalogEntry:
    spec = _spec("zeta2s_over_zeta", 1, [[1]], [[CoefficientScheme.constant(-1)]])
    return CatalogEntry(
        "zeta2s_over_zeta", spec, NOT_CF, NOT_CF, (2.0,),
        "zeta(2s)/zeta(s) = prod (1 + p^-s)^-1",
    )


def _l_chi4(params) -> CatalogEntry:
    return CatalogEntry(
        "L_chi4", _spec("L_chi4", 1, [[1]], [[L_CHI4]]), NOT_CF, NOT_CF, (2.0,),
        "L(s, chi_4), the non-principal character mod 4",
    )


def _l_m(index: int):
    def build(params) -> CatalogEntry:
        name = f"L{index}"
        return CatalogEntry(
            name, _spec(name, 1, [[1]], [[L_M[index]]]), NOT_CF, NOT_CF, (2.0,),
            f"L_{index}(s): coefficient -1 at p = {1 + index}, 1 elsewhere",
        )

    return build


def _l1l2(params) -> CatalogEntry:
    return CatalogEntry(
        "L1L2", _spec("L1L2", 1, [[1]], [[L_M[1], L_M[2]]]), CP, CP, (2.0,), "L_1(s) L_2(s)"
    )


def _zeta_l_chi(params) -> CatalogEntry:
    return CatalogEntry(
        "zeta_L_chi", _spec("zeta_L_chi", 1, [[1]], [[ONE, L_CHI4]]), CP, CP, (2.0,),
        "zeta(s) L(s, chi_4)",
    )


def _dedekind_qi(params) -> CatalogEntry:
    return CatalogEntry(
        "dedekind_qi", _spec("dedekind_qi", 1, [[1]], [[ONE, L_CHI4]]), CP, CP, (2.0,),
        "Dedekind zeta of Q(i) = zeta(s) L(s, chi_4), with closed-form atoms",
        closed_form_atoms=_dedekind_qi_mass,
    )


def _zeta2_l2s(params) -> CatalogEntry:
    spec = _spec("zeta2_L2s", 1, [[1], [2]], [[ONE, ONE], [L_CHI4, ZERO]])
    return CatalogEntry(
        "zeta2_L2s", spec, CP, OOTS, (2.0,),
        "zeta(s)^2 L(2s, chi_4); collinear directions, nonnegative merged atoms",
        certificate=CertificateStatus.CERTIFIED_UP_TO_TRUNCATION,
        closed_form_atoms=_zeta2_l2s_mass,
    )


def _l_zeta2s(params) -> CatalogEntry:
    spec = _spec("L_zeta2s", 1, [[1], [2]], [[L_CHI4], [ONE]])
    return CatalogEntry(
        "L_zeta2s", spec, NOT_CF, OOTS, (2.0,),
        "L(s, chi_4) zeta(2s); collinear directions, negative atom at 3",
        certificate=CertificateStatus.NEGATIVE_ATOM_FOUND,
    )


def _odd_riemann(params) -> CatalogEntry:
    spec = _spec("odd_riemann", 1, [[1]], [[CoefficientScheme.table(1, {2: 0})]])
    return CatalogEntry(
        "odd_riemann", spec, CP, CP, (2.0,),
        "zeta(s) without the factor at 2 (Hurwitz u = 1/2 Levy measure)",
    )


def _md_iii(params) -> CatalogEntry:
    spec = _spec("md_iii", 2, [[1, 0], [1, 1]], [[ONE], [ONE]])
    return CatalogEntry("md_iii", spec, CP, CP, (2.0, 0.0), "zeta(s1) zeta(s1 + s2)")


def _md_iv(params) -> CatalogEntry:
    spec = _spec("md_iv", 2, [[1, 0], [1, 2]], [[ONE], [L_CHI4]])
    return CatalogEntry(
        "md_iv", spec, NOT_CF, NOT_CF, (2.0, 0.5), "zeta(s1) L(s1 + 2 s2, chi_4)"
    )


def _rank_shift(params) -> CatalogEntry:
    alpha = parse_rational(params.pop("alpha", "1/2"), "alpha")
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}", {"alpha": str(alpha)})
    name = "rank_shift"
    spec = _spec(name, 2, [[1, 0], [1, 1]], [[CoefficientScheme.prime_power(alpha)], [ONE]])
    return CatalogEntry(
        name, spec, CP, CP, (2.0, 0.0), f"zeta(s1 + {alpha}) zeta(s1 + s2)",
        params={"alpha": alpha},
    )


def _tuple_rank_i(params) -> CatalogEntry:
    index = _int_param(params, "index", 1, (1, 2))
    L = L_M[index]
    spec = _spec("tuple_rank_i", 2, [[1, 0], [1, 1]], [[ONE, L], [ONE, L]])
    return CatalogEntry(
        "tuple_rank_i", spec, CP, CP, (2.0, 0.0),
        f"zeta(s1) L_{index}(s1) zeta(s1 + s2) L_{index}(s1 + s2)",
        params={"index": index},
    )


def _tuple_rank_ii(params) -> CatalogEntry:
    index = _int_param(params, "index", 1, (1, 2))
    form = _int_param(params, "form", 1, (1, 2))
    L = L_M[index]
    if form == 1:
        rows, text = [[L, ZERO], [ONE, L]], f"L_{index}(s1) zeta(s1 + s2) L_{index}(s1 + s2)"
    else:
        rows, text = [[ONE, L], [L, ZERO]], f"zeta(s1) L_{index}(s1) L_{index}(s1 + s2)"
    spec = _spec("tuple_rank_ii", 2, [[1, 0], [1, 1]], rows)
    return CatalogEntry(
        "tuple_rank_ii", spec, NOT_CF, NOT_CF, (2.0, 0.0), text,
        params={"index": index, "form": form},
    )


_REGISTRY: Dict[str, Callable[[Dict[str, Any]], CatalogEntry]] = {
    "riemann": _riemann,
    "zeta_2s": _zeta_2s,
    "zeta2s_over_zeta": _zeta2s_over_zeta,
    "L_chi4": _l_chi4,
    "L1": _l_m(1),
    "L2": _l_m(2),
    "L1L2": _l1l2,
    "zeta_L_chi": _zeta_l_chi,
    "dedekind_qi": _dedekind_qi,
    "zeta2_L2s": _zeta2_l2s,
    "L_zeta2s": _l_zeta2s,
    "odd_riemann": _odd_riemann,
    "md_iii": _md_iii,
    "md_iv": _md_iv,
    "rank_shift": _rank_shift,
    "tuple_rank_i": _tuple_rank_i,
    "tuple_rank_ii": _tuple_rank_ii,
}


def list_names() -> List[str]:
    return list(_REGISTRY)


def get(name: str, **params: Any) -> CatalogEntry:
    """Build a catalog entry; unknown names or parameters raise CatalogLookupError."""
    if name not in _REGISTRY:
        raise CatalogLookupError(
            f"unknown catalog entry {name!r}", {"available": list_names()}
        )
    remaining = dict(params)
    entry = _REGISTRY[name](remaining)
    if remaining:
        raise CatalogLookupError(
            f"catalog entry {name!r} has no parameter(s) {sorted(remaining)}",
            {"unknown": sorted(remaining)},
        )
    try:
        validate(entry.spec)
    except SpecValidationError:
        logger.error("catalog entry %s failed validation", name)
        raise
    return entry


__all__ = ["CatalogEntry", "get", "list_names"]
