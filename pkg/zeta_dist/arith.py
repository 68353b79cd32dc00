"""
Prime tables and real Dirichlet characters.

The sieve is an odd-only segmented sieve of Eratosthenes over numpy boolean
masks; tables are cached per limit and immutable once built.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from zeta_dist.errors import DomainError, SpecValidationError

logger = logging.getLogger(__name__)

MAX_SIEVE_LIMIT = 2**31
SEGMENT_ODDS = 1 << 20


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """All primes <= limit, ascending."""

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    @cached_property
    def log_primes(self) -> np.ndarray:
        logs = np.log(self.primes.astype(np.float64))
        logs.setflags(write=False)
        return logs

    def up_to(self, bound: int) -> np.ndarray:
        """Primes <= bound (a view)."""
        return self.primes[: int(np.searchsorted(self.primes, bound, side="right"))]

    def tolist(self) -> List[int]:
        return [int(p) for p in self.primes]


def _base_primes(limit: int) -> np.ndarray:
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@lru_cache(maxsize=8)
def sieve(limit: int) -> PrimeTable:
    """Return all primes <= limit."""
    if limit < 2:
        raise DomainError(f"sieve limit must be >= 2, got {limit}", {"limit": limit})
    if limit > MAX_SIEVE_LIMIT:
        raise DomainError(
            f"sieve limit {limit} exceeds the cap 2^31", {"limit": limit, "cap": MAX_SIEVE_LIMIT}
        )

    base = _base_primes(math.isqrt(limit) + 1)
    chunks: List[np.ndarray] = [np.array([2], dtype=np.int64)]

    # odd-only segments: index i of a segment starting at `low` stands for low + 2i
    low = 3
    while low <= limit:
        high = min(low + 2 * SEGMENT_ODDS, limit + 1)  # exclusive
        count = (high - low + 1) // 2
        mask = np.ones(count, dtype=bool)
        for p in base[1:]:
            p = int(p)
            p2 = p * p
            if p2 >= high:
                break
            start = max(p2, ((low + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            if start >= high:
                continue
            mask[(start - low) // 2 :: p] = False
        chunks.append(low + 2 * np.flatnonzero(mask).astype(np.int64))
        low = high if high % 2 == 1 else high + 1

    primes = np.concatenate(chunks)
    primes = primes[primes <= limit]
    primes.setflags(write=False)
    logger.debug("sieve(%d): %d primes", limit, primes.size)
    return PrimeTable(limit=limit, primes=primes)


def smallest_prime_factors(n_max: int) -> np.ndarray:
    """spf[n] for 0 <= n <= n_max (spf[0] = spf[1] = 0)."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, n_max + 1):
        if spf[p] == 0:
            block = spf[p::p]
            block[block == 0] = p
    return spf


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker_symbol(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 1."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    while n % 2 == 0:
        n //= 2
        if d % 2 == 0:
            return 0
        if d % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * _jacobi(d, n)


@dataclass(frozen=True)
class RealCharacter:
    """A real Dirichlet character given by its residue table mod `modulus`."""

    modulus: int
    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        violations = character_violations(self.modulus, self.values)
        if violations:
            raise SpecValidationError(violations)

    @classmethod
    def principal(cls, modulus: int = 1) -> "RealCharacter":
        return cls(modulus, tuple(1 if math.gcd(a, modulus) == 1 else 0 for a in range(modulus)))

    @classmethod
    def quadratic(cls, discriminant: int) -> "RealCharacter":
        """The Kronecker character n -> (D/n), modulus |D|."""
        q = abs(discriminant)
        if q < 3:
            raise DomainError(f"discriminant {discriminant} too small", {"D": discriminant})
        return cls(q, tuple(kronecker_symbol(discriminant, a if a else q) for a in range(q)))

    @classmethod
    def chi4(cls) -> "RealCharacter":
        """The non-principal character mod 4: chi(1) = 1, chi(3) = -1."""
        return cls(4, (0, 1, 0, -1))

    @cached_property
    def unit_values(self) -> FrozenSet[int]:
        """Values taken on residues coprime to the modulus."""
        return frozenset(
            v for a, v in enumerate(self.values) if math.gcd(a, self.modulus) == 1
        )

    def to_dict(self) -> Dict[str, object]:
        return {"modulus": self.modulus, "values": list(self.values)}


def character_violations(modulus: int, values: Sequence[int]) -> List[Dict[str, str]]:
    """Structured list of reasons the table is not a real Dirichlet character."""
    errors: List[Dict[str, str]] = []

    def add(message: str, recommendation: str) -> None:
        errors.append({"field": "character", "message": message, "recommendation": recommendation})

    if not isinstance(modulus, int) or modulus < 1:
        add(f"modulus must be a positive integer, got {modulus!r}", "Use q >= 1")
        return errors
    if len(values) != modulus:
        add(f"expected {modulus} residue values, got {len(values)}", "List chi(0..q-1)")
        return errors
    if any(v not in (-1, 0, 1) for v in values):
        add("values must lie in {-1, 0, 1}", "Only real characters are supported")
        return errors

    for a, v in enumerate(values):
        if (v == 0) != (math.gcd(a, modulus) > 1):
            add(f"chi({a}) = {v} but gcd({a}, {modulus}) = {math.gcd(a, modulus)}",
                "chi(n) = 0 exactly when gcd(n, q) > 1")
            return errors
    if modulus > 1 and values[1] != 1:
        add("chi(1) must be 1", "Set chi(1) = 1")
        return errors
    for a in range(modulus):
        for b in range(a, modulus):
            if values[(a * b) % modulus] != values[a] * values[b]:
                add(f"chi({a}*{b}) != chi({a})*chi({b})", "The table must be multiplicative")
                return errors
    return errors


def char_value(chi: RealCharacter, n: int) -> int:
    """chi(n) for n >= 1."""
    if n < 1:
        raise DomainError(f"char_value needs n >= 1, got {n}", {"n": n})
    return chi.values[n % chi.modulus]
