"""
Multidimensional polynomial Euler products.

    Z_E(s) = prod_p prod_{l,k} (1 - alpha_lk(p) p^{-<a_l, s>})^{-1}

with the log defined as the Dirichlet series

    log Z_E(s) = sum_p sum_r sum_{l,k} (1/r) alpha_lk(p)^r p^{-r <a_l, s>}.

Direction vectors are exact rationals; inner products against sigma and t are
formed exactly and rounded once. Both evaluation paths (product and log series)
carry the same certified truncation tail.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from zeta_dist.arith import PrimeTable, RealCharacter, sieve
from zeta_dist.config import DEFAULT_SETTINGS, Settings
from zeta_dist.errors import DomainError, SpecValidationError

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]
RealVector = Tuple[float, ...]


class SchemeKind(Enum):
    """How alpha(p) is produced for a coefficient row."""

    CONSTANT = "constant"
    CHARACTER = "character"
    TABLE = "table"
    PRIME_POWER = "prime_power"


@dataclass(frozen=True)
class CoefficientScheme:
    """alpha(p) for one (l, k) cell of the coefficient grid."""

    kind: SchemeKind
    value: Fraction = Fraction(0)  # constant value, or table default
    character: Optional[RealCharacter] = None
    overrides: Tuple[Tuple[int, Fraction], ...] = ()
    shift: Fraction = Fraction(0)  # prime_power: alpha(p) = p^-shift

    @classmethod
    def constant(cls, value: Union[int, Fraction]) -> "CoefficientScheme":
        return cls(SchemeKind.CONSTANT, value=Fraction(value))

    @classmethod
    def from_character(cls, chi: RealCharacter) -> "CoefficientScheme":
        return cls(SchemeKind.CHARACTER, character=chi)

    @classmethod
    def table(
        cls, default: Union[int, Fraction], overrides: Dict[int, Union[int, Fraction]]
    ) -> "CoefficientScheme":
        items = tuple(sorted((int(p), Fraction(v)) for p, v in overrides.items()))
        return cls(SchemeKind.TABLE, value=Fraction(default), overrides=items)

    @classmethod
    def prime_power(cls, shift: Union[int, Fraction]) -> "CoefficientScheme":
        return cls(SchemeKind.PRIME_POWER, shift=Fraction(shift))

    @property
    def is_strict(self) -> bool:
        """True when every alpha(p) lies in {-1, 0, 1}."""
        if self.kind is SchemeKind.CONSTANT:
            return self.value in (-1, 0, 1)
        if self.kind is SchemeKind.CHARACTER:
            return True
        if self.kind is SchemeKind.TABLE:
            return self.value in (-1, 0, 1) and all(v in (-1, 0, 1) for _, v in self.overrides)
        return self.shift == 0

    @property
    def is_zero(self) -> bool:
        return self.kind is SchemeKind.CONSTANT and self.value == 0

    def value_at(self, p: int) -> Union[Fraction, float]:
        """alpha(p); exact for every kind except prime_power."""
        if self.kind is SchemeKind.CONSTANT:
            return self.value
        if self.kind is SchemeKind.CHARACTER:
            assert self.character is not None
            return Fraction(self.character.values[p % self.character.modulus])
        if self.kind is SchemeKind.TABLE:
            return dict(self.overrides).get(p, self.value)
        if self.shift == 0:
            return Fraction(1)
        return math.exp(-float(self.shift) * math.log(p))

    def decompose(self, primes: np.ndarray) -> Tuple[np.ndarray, List[Fraction], Fraction]:
        """
        Write alpha(p) = values[codes[i]] * p^-shift over an array of primes.

        The value list is small and exact, which lets Levy masses be summed in
        rational arithmetic.
        """
        n = primes.size
        if self.kind is SchemeKind.CONSTANT:
            return np.zeros(n, dtype=np.int64), [self.value], Fraction(0)
        if self.kind is SchemeKind.PRIME_POWER:
            return np.zeros(n, dtype=np.int64), [Fraction(1)], self.shift
        if self.kind is SchemeKind.CHARACTER:
            assert self.character is not None
            residues = np.asarray(self.character.values, dtype=np.int64)
            return residues[primes % self.character.modulus] + 1, [
                Fraction(-1),
                Fraction(0),
                Fraction(1),
            ], Fraction(0)

        values = [self.value] + [v for _, v in self.overrides]
        codes = np.zeros(n, dtype=np.int64)
        # primes may arrive in either order
        for index, (p, _) in enumerate(self.overrides, start=1):
            codes[primes == p] = index
        return codes, values, Fraction(0)

    def evaluate(self, primes: np.ndarray) -> np.ndarray:
        """alpha(p) as binary64 over an array of primes."""
        if self.kind is SchemeKind.PRIME_POWER:
            return np.exp(-float(self.shift) * np.log(primes.astype(np.float64)))
        codes, values, _ = self.decompose(primes)
        lookup = np.array([float(v) for v in values], dtype=np.float64)
        return lookup[codes]

    def range_violations(self, path: str) -> List[Dict[str, str]]:
        errors: List[Dict[str, str]] = []
        in_range = "Coefficients must satisfy -1 <= alpha(p) <= 1"
        if self.kind in (SchemeKind.CONSTANT, SchemeKind.TABLE):
            if not -1 <= self.value <= 1:
                errors.append(
                    {"field": path, "message": f"value {self.value} outside [-1, 1]",
                     "recommendation": in_range}
                )
        if self.kind is SchemeKind.TABLE:
            for p, v in self.overrides:
                if not -1 <= v <= 1:
                    errors.append(
                        {"field": f"{path}.overrides[{p}]",
                         "message": f"value {v} outside [-1, 1]", "recommendation": in_range}
                    )
                if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
                    errors.append(
                        {"field": f"{path}.overrides[{p}]", "message": f"{p} is not a prime",
                         "recommendation": "Override keys must be primes"}
                    )
        if self.kind is SchemeKind.PRIME_POWER and self.shift < 0:
            errors.append(
                {"field": path, "message": f"shift {self.shift} is negative",
                 "recommendation": "p^-shift stays in (0, 1] only for shift >= 0"}
            )
        if self.kind is SchemeKind.CHARACTER and self.character is None:
            errors.append(
                {"field": path, "message": "character scheme without a character",
                 "recommendation": "Give modulus and values"}
            )
        return errors


class DirectionMode(Enum):
    LI = "LI"
    LR = "LR"
    NONE = "None"


@dataclass(frozen=True)
class DirectionHint:
    """User declaration about the direction vectors."""

    mode: DirectionMode
    psi: Tuple[Fraction, ...] = ()
    psi_literals: Tuple[str, ...] = ()
    note: str = ""


@dataclass(frozen=True)
class ProductSpec:
    """Full description of Z^{eta,phi}_E."""

    d: int
    directions: Tuple[Vector, ...]
    tuple_size: int
    coefficients: Tuple[Tuple[CoefficientScheme, ...], ...]
    direction_mode_hint: Optional[DirectionHint] = None
    name: str = ""

    @property
    def phi(self) -> int:
        return len(self.directions)

    @property
    def m(self) -> int:
        return self.phi * self.tuple_size

    @property
    def is_strict(self) -> bool:
        return all(s.is_strict for row in self.coefficients for s in row)

    def effective_directions(self) -> Tuple[Vector, ...]:
        """Directions a_l; under an LR hint, psi_l times the common stored vector."""
        hint = self.direction_mode_hint
        if hint is not None and hint.mode is DirectionMode.LR and len(hint.psi) == self.phi:
            return tuple(tuple(psi * x for x in a) for psi, a in zip(hint.psi, self.directions))
        return self.directions

    def rows(self) -> List[Tuple[int, int, CoefficientScheme]]:
        return [(l, k, s) for l, row in enumerate(self.coefficients) for k, s in enumerate(row)]


@dataclass(frozen=True)
class ValidatedSpec:
    """A ProductSpec that passed validation, with its effective directions."""

    spec: ProductSpec
    directions: Tuple[Vector, ...]

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def m(self) -> int:
        return self.spec.m


SpecLike = Union[ProductSpec, ValidatedSpec]


class SpecValidator:
    """Checks ProductSpec invariants and reports every violation found."""

    def check(self, spec: ProductSpec) -> Dict[str, Any]:
        """Non-raising validation in the {valid, errors, recommendation} shape."""
        result: Dict[str, Any] = {
            "spec": spec.name or "<unnamed>",
            "valid": False,
            "errors": [],
            "recommendation": None,
        }
        errors = self.violations(spec)
        result["errors"] = errors
        if errors:
            result["recommendation"] = errors[0]["recommendation"]
        else:
            result["valid"] = True
        return result

    def violations(self, spec: ProductSpec) -> List[Dict[str, str]]:
        errors: List[Dict[str, str]] = []

        def add(path: str, message: str, recommendation: str) -> None:
            errors.append({"field": path, "message": message, "recommendation": recommendation})

        if not isinstance(spec.d, int) or spec.d < 1:
            add("d", f"dimension must be >= 1, got {spec.d!r}", "Set d to a positive integer")
            return errors
        if spec.phi < 1:
            add("directions", "no direction vectors", "Give at least one direction")
        if not isinstance(spec.tuple_size, int) or spec.tuple_size < 1:
            add("tuple_size", f"tuple size must be >= 1, got {spec.tuple_size!r}",
                "Set tuple_size to a positive integer")
            return errors

        for l, a in enumerate(spec.directions):
            if len(a) != spec.d:
                add(f"directions[{l}]", f"length {len(a)} != d = {spec.d}",
                    "Every direction needs d entries")
            elif all(x == 0 for x in a):
                add(f"directions[{l}]", "zero vector", "Directions must be nonzero")

        if len(spec.coefficients) != spec.phi:
            add("coefficients", f"{len(spec.coefficients)} rows for {spec.phi} directions",
                "coefficients must be a phi x eta grid")
        for l, row in enumerate(spec.coefficients):
            if len(row) != spec.tuple_size:
                add(f"coefficients[{l}]", f"{len(row)} schemes, tuple_size = {spec.tuple_size}",
                    "coefficients must be a phi x eta grid")
            for k, scheme in enumerate(row):
                errors.extend(scheme.range_violations(f"coefficients[{l}][{k}]"))

        hint = spec.direction_mode_hint
        if hint is not None and hint.mode is DirectionMode.LR:
            if len(hint.psi) != spec.phi:
                add("direction_mode_hint.psi", f"{len(hint.psi)} multipliers for {spec.phi} "
                    "directions", "Declare one psi per direction")
            elif any(psi == 0 for psi in hint.psi):
                add("direction_mode_hint.psi", "zero multiplier", "LR multipliers are nonzero")
            if len(set(spec.directions)) > 1:
                add("directions", "LR declaration with differing stored directions",
                    "Under LR store the common vector a in every row")
        return errors


def validate(spec: SpecLike) -> ValidatedSpec:
    """Validate a spec, raising SpecValidationError with every violation."""
    if isinstance(spec, ValidatedSpec):
        return spec
    try:
        return _validate_cached(spec)
    except TypeError:
        # unhashable fields (lists built by hand); validate without the cache
        return _validate_cached.__wrapped__(spec)


@lru_cache(maxsize=128)
def _validate_cached(spec: ProductSpec) -> ValidatedSpec:
    errors = SpecValidator().violations(spec)
    if errors:
        raise SpecValidationError(errors)
    return ValidatedSpec(spec=spec, directions=spec.effective_directions())


def dot_exact(a: Vector, x: Sequence[float]) -> float:
    """<a, x> formed in exact arithmetic, rounded once."""
    return float(sum((ai * Fraction(xi) for ai, xi in zip(a, x)), Fraction(0)))


def dot_fraction(a: Vector, x: Sequence[float]) -> Fraction:
    return sum((ai * Fraction(xi) for ai, xi in zip(a, x)), Fraction(0))


@dataclass(frozen=True)
class EvalPoint:
    """s = sigma + i t."""

    sigma: RealVector
    t: RealVector

    @classmethod
    def real(cls, sigma: Sequence[float]) -> "EvalPoint":
        return cls(tuple(float(x) for x in sigma), tuple(0.0 for _ in sigma))

    def conjugate(self) -> "EvalPoint":
        return EvalPoint(self.sigma, tuple(-x for x in self.t))


@dataclass(frozen=True)
class TruncationPolicy:
    """Prime limit P, power limit R and an optional tail tolerance."""

    prime_limit: int = DEFAULT_SETTINGS.prime_limit
    power_limit: Optional[int] = None
    target_tail_tol: Optional[float] = None

    def __post_init__(self) -> None:
        if self.prime_limit < 2:
            raise DomainError("prime_limit must be >= 2", {"prime_limit": self.prime_limit})
        if self.power_limit is not None and self.power_limit < 1:
            raise DomainError("power_limit must be >= 1", {"power_limit": self.power_limit})
        if self.target_tail_tol is not None and self.target_tail_tol <= 0:
            raise DomainError("tail tolerance must be > 0", {"tol": self.target_tail_tol})

    @classmethod
    def from_settings(cls, settings: Settings) -> "TruncationPolicy":
        return cls(settings.prime_limit, settings.power_limit, settings.tail_tol)

    def powers_for(self, v: float) -> int:
        if self.power_limit is not None:
            return self.power_limit
        return max(2, math.ceil(40.0 / v))

    def resolved(self, v: float, m: int, settings: Settings = DEFAULT_SETTINGS) -> "TruncationPolicy":
        """Fix R for this v and, under a tolerance, raise P until the tail fits."""
        policy = TruncationPolicy(self.prime_limit, self.powers_for(v), self.target_tail_tol)
        if self.target_tail_tol is None:
            return policy
        while tail_bound(policy, v, m) > self.target_tail_tol:
            if policy.prime_limit >= settings.max_prime_limit:
                logger.warning(
                    "tail tolerance %.3g unreachable; using P = %d (tail %.3g)",
                    self.target_tail_tol, policy.prime_limit, tail_bound(policy, v, m),
                )
                break
            policy = TruncationPolicy(
                min(2 * policy.prime_limit, settings.max_prime_limit),
                policy.power_limit,
                self.target_tail_tol,
            )
        logger.info("resolved policy P=%d R=%d", policy.prime_limit, policy.power_limit)
        return policy

    def doubled(self, v: Optional[float] = None) -> "TruncationPolicy":
        """(2P, 2R) refinement; an unset R is resolved against v first when v is given."""
        if self.power_limit is None and v is not None:
            power: Optional[int] = 2 * self.powers_for(v)
        else:
            power = None if self.power_limit is None else 2 * self.power_limit
        return TruncationPolicy(2 * self.prime_limit, power, self.target_tail_tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "prime_limit": self.prime_limit,
            "power_limit": self.power_limit,
            "target_tail_tol": self.target_tail_tol,
        }


def convergence_margin(spec: SpecLike, sigma: Sequence[float]) -> float:
    """v = min_l <a_l, sigma>."""
    vspec = validate(spec)
    if len(sigma) != vspec.d:
        raise DomainError(
            f"sigma has {len(sigma)} components, spec has d = {vspec.d}",
            {"sigma": list(sigma), "d": vspec.d},
        )
    return min(dot_exact(a, sigma) for a in vspec.directions)


def _require_margin(spec: SpecLike, sigma: Sequence[float]) -> float:
    v = convergence_margin(spec, sigma)
    if v <= 1:
        raise DomainError(
            f"sigma outside the region of absolute convergence (v = {v} <= 1)",
            {"sigma": list(sigma), "v": v},
        )
    return v


def _require_dimension(vspec: ValidatedSpec, point: EvalPoint) -> None:
    if len(point.t) != vspec.d:
        raise DomainError(
            f"t has {len(point.t)} components, spec has d = {vspec.d}",
            {"t": list(point.t), "d": vspec.d},
        )


def tail_bound(policy: TruncationPolicy, v: float, m: int) -> float:
    """
    Upper bound on the absolute value of every omitted log-series term.

    Primes above P: sum_r |alpha|^r p^{-rv} / r <= 2 p^{-v}, and
    sum_{n > P} n^{-v} <= P^{1-v} / (v - 1). Powers above R for p <= P:
    sum_{r > R} p^{-rv} / r <= 2^{-(R+1)v} / ((R + 1)(1 - 2^{-v})).
    """
    if v <= 1:
        raise DomainError(f"tail_bound needs v > 1, got {v}", {"v": v})
    P = policy.prime_limit
    R = policy.powers_for(v)
    prime_tail = 2.0 * P ** (1.0 - v) / (v - 1.0)
    power_tail = len(sieve(P)) * 2.0 ** (-(R + 1) * v) / ((R + 1) * (1.0 - 2.0 ** (-v)))
    return m * (prime_tail + power_tail)


def compensated_sum(parts: Sequence[complex]) -> complex:
    return complex(math.fsum(z.real for z in parts), math.fsum(z.imag for z in parts))


def _series_terms(
    vspec: ValidatedSpec, point: EvalPoint, table: PrimeTable, powers: int
) -> List[complex]:
    """Per-(row, r) partial sums of the log series, each summed exactly."""
    primes = table.primes[::-1]
    logs = table.log_primes[::-1]
    partials: List[complex] = []
    for l, k, scheme in vspec.spec.rows():
        if scheme.is_zero:
            continue
        a = vspec.directions[l]
        a_sigma = dot_exact(a, point.sigma)
        a_t = dot_exact(a, point.t)
        alpha = scheme.evaluate(primes)
        keep = alpha != 0
        alpha, lp = alpha[keep], logs[keep]
        if alpha.size == 0:
            continue
        for r in range(1, powers + 1):
            mag = alpha**r / r * np.exp(-r * a_sigma * lp)
            phase = r * a_t * lp
            partials.append(
                complex(math.fsum(mag * np.cos(phase)), -math.fsum(mag * np.sin(phase)))
            )
    return partials


def eval_log(
    spec: SpecLike, point: EvalPoint, policy: TruncationPolicy = TruncationPolicy()
) -> Tuple[complex, float]:
    """Truncated log Z_E(s) and its certified tail."""
    vspec = validate(spec)
    v = _require_margin(vspec, point.sigma)
    _require_dimension(vspec, point)
    resolved = policy.resolved(v, vspec.m)
    table = sieve(resolved.prime_limit)
    assert resolved.power_limit is not None
    value = compensated_sum(_series_terms(vspec, point, table, resolved.power_limit))
    return value, tail_bound(resolved, v, vspec.m)


def eval(spec: SpecLike, point: EvalPoint, policy: TruncationPolicy = TruncationPolicy()) -> complex:
    """Truncated Euler product prod_{p <= P} prod_{l,k} (1 - alpha p^{-<a_l, s>})^{-1}."""
    vspec = validate(spec)
    v = _require_margin(vspec, point.sigma)
    _require_dimension(vspec, point)
    resolved = policy.resolved(v, vspec.m)
    table = sieve(resolved.prime_limit)
    primes = table.primes[::-1]
    logs = table.log_primes[::-1]

    factors = []
    for l, k, scheme in vspec.spec.rows():
        if scheme.is_zero:
            continue
        a = vspec.directions[l]
        a_sigma = dot_exact(a, point.sigma)
        a_t = dot_exact(a, point.t)
        alpha = scheme.evaluate(primes)
        z = alpha * np.exp(-a_sigma * logs) * (np.cos(a_t * logs) - 1j * np.sin(a_t * logs))
        factors.append(1.0 / (1.0 - z))

    if not factors:
        return complex(1.0, 0.0)
    value = complex(np.prod(np.concatenate(factors)))
    if value == 0:
        raise DomainError("Euler product underflowed to zero", {"sigma": list(point.sigma)})
    return value


def normalized_cf(
    spec: SpecLike,
    sigma: Sequence[float],
    t: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
) -> complex:
    """f_sigma(t) = Z_E(sigma + i t) / Z_E(sigma) via the log series."""
    at_t, _ = eval_log(spec, EvalPoint(tuple(sigma), tuple(t)), policy)
    at_0, _ = eval_log(spec, EvalPoint.real(sigma), policy)
    return complex(np.exp(at_t - at_0))


def log_normalized_cf(
    spec: SpecLike,
    sigma: Sequence[float],
    t: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
) -> complex:
    """log f_sigma(t) on the series branch."""
    at_t, _ = eval_log(spec, EvalPoint(tuple(sigma), tuple(t)), policy)
    at_0, _ = eval_log(spec, EvalPoint.real(sigma), policy)
    return at_t - at_0


def dirichlet_coefficients(
    spec: SpecLike, n_max: int
) -> Dict[Tuple[int, int], List[Union[Fraction, float]]]:
    """
    Completely multiplicative coefficients A(n), 1 <= n <= n_max, of every row.

    Index 0 of each list is unused (set to 0).
    """
    from zeta_dist.arith import smallest_prime_factors

    if n_max < 1:
        raise DomainError("n_max must be >= 1", {"n_max": n_max})
    vspec = validate(spec)
    spf = smallest_prime_factors(n_max).tolist()
    out: Dict[Tuple[int, int], List[Union[Fraction, float]]] = {}
    for l, k, scheme in vspec.spec.rows():
        coeffs: List[Union[Fraction, float]] = [Fraction(0)] * (n_max + 1)
        if n_max >= 1:
            coeffs[1] = Fraction(1)
        for n in range(2, n_max + 1):
            p = spf[n]
            coeffs[n] = scheme.value_at(p) * coeffs[n // p]
        out[(l, k)] = coeffs
    return out


def spec_summary(spec: SpecLike) -> Dict[str, Any]:
    vspec = validate(spec)
    return {
        "name": vspec.spec.name,
        "d": vspec.d,
        "phi": vspec.spec.phi,
        "tuple_size": vspec.spec.tuple_size,
        "strict": vspec.spec.is_strict,
    }


__all__ = [
    "CoefficientScheme",
    "DirectionHint",
    "DirectionMode",
    "EvalPoint",
    "ProductSpec",
    "SchemeKind",
    "SpecValidator",
    "TruncationPolicy",
    "ValidatedSpec",
    "convergence_margin",
    "dirichlet_coefficients",
    "eval",
    "eval_log",
    "log_normalized_cf",
    "normalized_cf",
    "tail_bound",
    "validate",
]
