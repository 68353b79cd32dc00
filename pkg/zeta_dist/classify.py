"""
Compound Poisson classification of normalized Euler products.

Three sign-condition theorems decide the question for strict coefficients:

- Tuple: every direction is the same vector; f is a compound Poisson
  characteristic function iff sum_k alpha_k(p) >= 0 for all primes p.
- Rank: eta = 1 with LI or LR directions; iff alpha_l(p) >= 0 for all l, p.
- Main: LI or LR directions, eta >= 1; iff beta_l(p) = sum_k alpha_lk(p) >= 0.

Rows with equal direction vectors are grouped first, so a spec with repeated
directions falls into the theorem matching its distinct directions. Direction
sets outside LI/LR are reported as out of scope and can be handed to the
atom-level certificate.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from zeta_dist.arith import sieve
from zeta_dist.config import DEFAULT_SETTINGS, Settings
from zeta_dist.errors import DomainError, UnsupportedCoefficientsError
from zeta_dist.levy import LevyAtom, LevyMeasure, atom_weight, enumerate_atoms
from zeta_dist.product import (
    CoefficientScheme,
    DirectionMode,
    SchemeKind,
    SpecLike,
    TruncationPolicy,
    ValidatedSpec,
    Vector,
    convergence_margin,
    validate,
)

logger = logging.getLogger(__name__)


class DirectionKind(Enum):
    LI = "LI"
    LR = "LR"
    COLLINEAR_RATIONAL = "Collinear-rational"
    MIXED = "Mixed"


class Verdict(Enum):
    COMPOUND_POISSON = "CompoundPoisson"
    NOT_CHARACTERISTIC = "NotCharacteristic"
    OUT_OF_THEOREM_SCOPE = "OutOfTheoremScope"
    INCONCLUSIVE = "Inconclusive"


class TheoremUsed(Enum):
    TUPLE = "Tuple"
    RANK = "Rank"
    MAIN = "Main"
    ATOM_CERTIFICATE = "AtomCertificate"
    NONE = "None"


class CertificateStatus(Enum):
    CERTIFIED_UP_TO_TRUNCATION = "CertifiedUpToTruncation"
    NEGATIVE_ATOM_FOUND = "NegativeAtomFound"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DirectionCondition:
    """LI/LR/collinear status of a set of direction vectors."""

    mode: DirectionKind
    rank: int
    evidence: Dict[str, Any] = field(default_factory=dict)

    @property
    def admits_rank_theorems(self) -> bool:
        return self.mode in (DirectionKind.LI, DirectionKind.LR)

    def to_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode.value, "rank": self.rank, "evidence": self.evidence}


@dataclass(frozen=True)
class DirectionGroup:
    """All coefficient rows sharing one exact direction vector."""

    direction: Vector
    rows: Tuple[int, ...]  # 0-based direction indices merged here
    schemes: Tuple[CoefficientScheme, ...]

    @property
    def label(self) -> int:
        """1-based index of the first row, used in reports."""
        return self.rows[0] + 1


@dataclass(frozen=True)
class CertificationResult:
    status: CertificateStatus
    min_mass: Optional[float] = None
    atom: Optional[LevyAtom] = None
    atoms_checked: int = 0
    omitted_tail: float = 0.0
    notes: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "min_mass": self.min_mass,
            "atom": None if self.atom is None else self.atom.to_dict(),
            "atoms_checked": self.atoms_checked,
            "omitted_tail": self.omitted_tail,
            "notes": self.notes,
        }


@dataclass
class ClassificationResult:
    """Verdict with the evidence that produced it."""

    verdict: Verdict
    theorem_used: TheoremUsed = TheoremUsed.NONE
    offending_primes: List[Tuple[int, int]] = field(default_factory=list)
    direction: Optional[DirectionCondition] = None
    certification: Optional[CertificationResult] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "theorem_used": self.theorem_used.value,
            "offending": [list(pair) for pair in self.offending_primes],
            "direction_condition": None if self.direction is None else self.direction.to_dict(),
            "certification": None if self.certification is None else self.certification.to_dict(),
            "notes": self.notes,
        }


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q by fraction-exact row reduction."""
    matrix = [list(map(Fraction, row)) for row in rows]
    if not matrix:
        return 0
    n_cols = len(matrix[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((i for i in range(rank, len(matrix)) if matrix[i][col] != 0), None)
        if pivot is None:
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        lead = matrix[rank][col]
        for i in range(rank + 1, len(matrix)):
            if matrix[i][col] != 0:
                factor = matrix[i][col] / lead
                matrix[i] = [x - factor * y for x, y in zip(matrix[i], matrix[rank])]
        rank += 1
        if rank == len(matrix):
            break
    return rank


def condition_of_vectors(vectors: Sequence[Vector], spec: ValidatedSpec) -> DirectionCondition:
    hint = spec.spec.direction_mode_hint
    if hint is not None and hint.mode is DirectionMode.LR:
        return DirectionCondition(
            DirectionKind.LR,
            rank=1,
            evidence={
                "psi": list(hint.psi_literals),
                "note": hint.note,
                "declared": True,
                "remark": "Q-linear independence of psi is a declaration, not verified",
            },
        )

    rank = rational_rank(vectors)
    evidence: Dict[str, Any] = {"rank": rank, "count": len(vectors)}
    if hint is not None and hint.mode is DirectionMode.LI and rank < len(vectors):
        evidence["rejected_hint"] = "LI"
    if rank == len(vectors):
        return DirectionCondition(DirectionKind.LI, rank, evidence)
    if rank == 1:
        base = vectors[0]
        pivot = next(j for j, x in enumerate(base) if x != 0)
        evidence["ratios"] = [str(v[pivot] / base[pivot]) for v in vectors]
        return DirectionCondition(DirectionKind.COLLINEAR_RATIONAL, rank, evidence)
    return DirectionCondition(DirectionKind.MIXED, rank, evidence)


def direction_condition(spec: SpecLike) -> DirectionCondition:
    """LI by exact rank, LR only by declaration, otherwise collinear or mixed."""
    vspec = validate(spec)
    return condition_of_vectors(vspec.directions, vspec)


def group_directions(spec: SpecLike) -> List[DirectionGroup]:
    """Merge coefficient rows whose effective directions are equal."""
    vspec = validate(spec)
    order: List[Vector] = []
    members: Dict[Vector, List[int]] = {}
    for l, a in enumerate(vspec.directions):
        if a not in members:
            members[a] = []
            order.append(a)
        members[a].append(l)
    return [
        DirectionGroup(
            direction=a,
            rows=tuple(members[a]),
            schemes=tuple(s for l in members[a] for s in vspec.spec.coefficients[l]),
        )
        for a in order
    ]


def power_sums_nonnegative(alphas: Sequence[Fraction], max_power: int = 15) -> bool:
    """True iff sum alpha^r >= 0 for every 2 <= r <= max_power."""
    return all(sum(Fraction(a) ** r for a in alphas) >= 0 for r in range(2, max_power + 1))


def sign_lemma_holds(alphas: Sequence[Fraction], max_power: int = 15) -> bool:
    """For strict alphas: (sum alpha >= 0) iff (all power sums >= 0)."""
    require_strict(alphas)
    return (sum(Fraction(a) for a in alphas) >= 0) == power_sums_nonnegative(alphas, max_power)


def require_strict(alphas: Sequence[Any]) -> None:
    """Reject coefficient vectors outside {-1, 0, 1}."""
    loose = [a for a in alphas if a not in (-1, 0, 1)]
    if loose:
        raise UnsupportedCoefficientsError(
            "sign conditions on sums need coefficients in {-1, 0, 1}",
            {"values": [str(a) for a in loose]},
        )


def _require_strict_group(group: DirectionGroup) -> None:
    # a lone shifted row keeps alpha(p) > 0, which is all the rank theorem uses
    if len(group.schemes) == 1 and group.schemes[0].kind is SchemeKind.PRIME_POWER:
        return
    loose = [s for s in group.schemes if not s.is_strict]
    if loose:
        raise UnsupportedCoefficientsError(
            "sum-based sign conditions need coefficients in {-1, 0, 1}",
            {
                "direction": group.label,
                "schemes": [s.kind.value for s in loose],
                "values": [str(s.value) for s in loose if s.kind is not SchemeKind.PRIME_POWER],
            },
        )


def _generic_value(scheme: CoefficientScheme, residue: int) -> Fraction:
    """alpha at a prime of the given unit residue class that is not an override."""
    if scheme.kind is SchemeKind.CONSTANT:
        return scheme.value
    if scheme.kind is SchemeKind.CHARACTER:
        assert scheme.character is not None
        return Fraction(scheme.character.values[residue % scheme.character.modulus])
    if scheme.kind is SchemeKind.TABLE:
        return scheme.value
    # p^-shift > 0; only its sign matters on this path
    return Fraction(1)


def _exact_value(scheme: CoefficientScheme, p: int) -> Fraction:
    value = scheme.value_at(p)
    return value if isinstance(value, Fraction) else Fraction(1)


def structural_negativity(group: DirectionGroup) -> Dict[str, Any]:
    """
    Decide exactly whether beta(p) < 0 for SOME prime p.

    Primes coprime to Q = lcm of the character moduli fill every unit class
    mod Q infinitely often, so the generic class values are attained. The
    finitely many override primes and primes dividing Q are checked one by one.
    """
    moduli = [s.character.modulus for s in group.schemes
              if s.kind is SchemeKind.CHARACTER and s.character is not None]
    q = math.lcm(*moduli) if moduli else 1
    exceptional = sorted(
        {p for s in group.schemes for p, _ in s.overrides}
        | {p for p in range(2, q + 1) if q % p == 0 and all(p % d for d in range(2, math.isqrt(p) + 1))}
    )
    negative_classes = []
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        if sum(_generic_value(s, a) for s in group.schemes) < 0:
            negative_classes.append(a)
    negative_exceptional = [
        p for p in exceptional if sum(_exact_value(s, p) for s in group.schemes) < 0
    ]
    return {
        "can_be_negative": bool(negative_classes or negative_exceptional),
        "modulus": q,
        "negative_classes": negative_classes,
        "negative_exceptional_primes": negative_exceptional,
    }


@dataclass(frozen=True)
class SignProfile:
    """beta_l(p) for p <= prime_limit, plus the structural verdict per group."""

    prime_limit: int
    primes: np.ndarray
    beta: Dict[int, np.ndarray]  # group label -> beta over primes
    structure: Dict[int, Dict[str, Any]]

    def as_map(self) -> Dict[Tuple[int, int], float]:
        return {
            (label, int(p)): float(b)
            for label, values in self.beta.items()
            for p, b in zip(self.primes, values)
        }

    def negative_pairs(self) -> List[Tuple[int, int]]:
        return sorted(
            (label, int(p))
            for label, values in self.beta.items()
            for p in self.primes[values < 0]
        )

    def can_be_negative(self, label: int) -> bool:
        return bool(self.structure[label]["can_be_negative"])


def _group_profile(groups: Sequence[DirectionGroup], prime_limit: int) -> SignProfile:
    for group in groups:
        _require_strict_group(group)
    primes = sieve(max(2, prime_limit)).primes
    beta = {g.label: np.sum([s.evaluate(primes) for s in g.schemes], axis=0) for g in groups}
    structure = {g.label: structural_negativity(g) for g in groups}
    return SignProfile(prime_limit, primes, beta, structure)


def sign_profile(spec: SpecLike, prime_limit: int = 100) -> SignProfile:
    """beta_l(p) = sum_k alpha_lk(p) per direction group."""
    return _group_profile(group_directions(spec), prime_limit)


def _offending(profile: SignProfile, groups: Sequence[DirectionGroup], cap: int) -> List[Tuple[int, int]]:
    """Negative (l, p) pairs; the scan widens until a structurally negative group shows one."""
    pairs = profile.negative_pairs()
    limit = profile.prime_limit
    while not pairs and limit < cap:
        limit = min(limit * 4, cap)
        pairs = _group_profile(groups, limit).negative_pairs()
    return pairs


def classify(
    spec: SpecLike,
    sigma: Sequence[float],
    scan_limit: int = 100,
    settings: Settings = DEFAULT_SETTINGS,
) -> ClassificationResult:
    """Apply the Tuple, Rank or Main theorem, or report the spec as out of scope."""
    vspec = validate(spec)
    v = convergence_margin(vspec, sigma)
    if v <= 1:
        raise DomainError(f"sigma outside the region of absolute convergence (v = {v} <= 1)",
                          {"sigma": list(sigma), "v": v})

    groups = group_directions(vspec)
    notes: List[str] = []
    if len(groups) == 1:
        theorem = TheoremUsed.TUPLE
        condition = DirectionCondition(DirectionKind.LI, 1, {"rank": 1, "count": 1,
                                                             "grouped_rows": vspec.spec.phi})
    else:
        condition = condition_of_vectors([g.direction for g in groups], vspec)
        if condition.mode is DirectionKind.LR:
            notes.append("LR accepted by declaration: " + (condition.evidence.get("note") or "no note"))
        if not condition.admits_rank_theorems:
            notes.append(
                f"directions are {condition.mode.value}; no sign theorem applies, "
                "use certify_by_atoms"
            )
            return ClassificationResult(
                Verdict.OUT_OF_THEOREM_SCOPE, TheoremUsed.NONE, [], condition, None, notes
            )
        theorem = (
            TheoremUsed.RANK if all(len(g.schemes) == 1 for g in groups) else TheoremUsed.MAIN
        )

    profile = _group_profile(groups, scan_limit)
    negative = [g for g in groups if profile.can_be_negative(g.label)]
    if not negative:
        logger.info("classify %s: CompoundPoisson via %s", vspec.spec.name, theorem.value)
        return ClassificationResult(Verdict.COMPOUND_POISSON, theorem, [], condition, None, notes)

    offending = _offending(profile, negative, settings.max_prime_limit)
    for g in negative:
        info = profile.structure[g.label]
        if info["negative_classes"]:
            notes.append(
                f"direction {g.label}: sum of coefficients is negative on residues "
                f"{info['negative_classes']} mod {info['modulus']}"
            )
        if info["negative_exceptional_primes"]:
            notes.append(
                f"direction {g.label}: negative at primes {info['negative_exceptional_primes']}"
            )
    logger.info("classify %s: NotCharacteristic via %s", vspec.spec.name, theorem.value)
    return ClassificationResult(
        Verdict.NOT_CHARACTERISTIC, theorem, offending, condition, None, notes
    )


def certify_by_atoms(
    spec: SpecLike,
    sigma: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
    settings: Settings = DEFAULT_SETTINGS,
    measure: Optional[LevyMeasure] = None,
) -> CertificationResult:
    """
    Sign of every merged Levy atom up to the truncation.

    A merged atom with an exact coefficient is signed exactly. Atoms mixing
    shifted rows are signed in binary64 and are undecided when their mass is
    within rounding of zero.
    """
    if measure is None:
        measure = enumerate_atoms(spec, sigma, policy, settings)
    if len(measure) == 0:
        return CertificationResult(
            CertificateStatus.CERTIFIED_UP_TO_TRUNCATION,
            min_mass=None,
            atoms_checked=0,
            omitted_tail=measure.omitted_tail,
            notes="empty measure",
        )

    undecided: List[int] = []
    worst_index = None
    for i in np.argsort(measure.masses, kind="stable").tolist():
        cls = measure.classes[int(measure.class_index[i])]
        mass = float(measure.masses[i])
        if cls.coefficient is not None:
            sign = (cls.coefficient > 0) - (cls.coefficient < 0)
        else:
            p = int(measure.primes[i])
            envelope = math.fsum(abs(float(c)) * atom_weight(p, e) for c, e in cls.parts)
            sign = 0 if abs(mass) <= 64 * np.finfo(float).eps * envelope else (mass > 0) - (mass < 0)
        if sign < 0 and worst_index is None:
            worst_index = i
        elif sign == 0:
            undecided.append(i)

    min_mass = float(np.min(measure.masses))
    if worst_index is not None:
        atom = measure.atoms[worst_index]
        logger.info("certify_by_atoms: negative atom at p=%d w=%s", atom.p, atom.w)
        return CertificationResult(
            CertificateStatus.NEGATIVE_ATOM_FOUND,
            min_mass=min_mass,
            atom=atom,
            atoms_checked=len(measure),
            omitted_tail=measure.omitted_tail,
            notes="a negative merged atom is a disproof candidate; run a witness search",
        )
    if undecided:
        return CertificationResult(
            CertificateStatus.INCONCLUSIVE,
            min_mass=min_mass,
            atom=measure.atoms[undecided[0]],
            atoms_checked=len(measure),
            omitted_tail=measure.omitted_tail,
            notes="some merged masses are within rounding of zero",
        )
    return CertificationResult(
        CertificateStatus.CERTIFIED_UP_TO_TRUNCATION,
        min_mass=min_mass,
        atoms_checked=len(measure),
        omitted_tail=measure.omitted_tail,
        notes=(
            f"all merged masses >= 0 for p <= {measure.policy.prime_limit}, "
            f"r <= {measure.policy.power_limit}"
        ),
    )


def resolve(
    spec: SpecLike,
    sigma: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
    settings: Settings = DEFAULT_SETTINGS,
) -> ClassificationResult:
    """classify, falling back to the atom certificate for out-of-scope specs."""
    result = classify(spec, sigma, settings=settings)
    if result.verdict is not Verdict.OUT_OF_THEOREM_SCOPE:
        return result

    cert = certify_by_atoms(spec, sigma, policy, settings)
    result.certification = cert
    if cert.status is CertificateStatus.CERTIFIED_UP_TO_TRUNCATION:
        result.verdict = Verdict.COMPOUND_POISSON
        result.theorem_used = TheoremUsed.ATOM_CERTIFICATE
        result.notes.append("every merged atom is nonnegative up to the truncation")
    else:
        result.verdict = Verdict.INCONCLUSIVE
        result.notes.append(cert.notes)
    return result
