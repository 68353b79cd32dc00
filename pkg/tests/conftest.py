"""
Shared oracles and fixtures.

Oracles are independent of the package: trial division for primes, mpmath for
zeta values, direct Dirichlet partial sums with an Euler-Maclaurin tail.
"""

import dataclasses
import math
from typing import List

import mpmath
import pytest

from zeta_dist.config import DEFAULT_SETTINGS
from zeta_dist.product import TruncationPolicy

mpmath.mp.dps = 30


def trial_division_primes(limit: int) -> List[int]:
    primes = []
    for n in range(2, limit + 1):
        if all(n % d for d in range(2, math.isqrt(n) + 1)):
            primes.append(n)
    return primes


def zeta_series_oracle(s: float, terms: int = 10_000) -> float:
    """sum_{n <= N} n^-s plus the Euler-Maclaurin tail."""
    s = mpmath.mpf(s)
    n = mpmath.mpf(terms)
    partial = mpmath.fsum(mpmath.power(k, -s) for k in range(1, terms + 1))
    tail = n ** (1 - s) / (s - 1) - n**-s / 2 + s * n ** (-s - 1) / 12
    return float(partial + tail)


def dirichlet_zeta_oracle(s: complex, terms: int = 10_000) -> complex:
    """zeta(s) for complex s, summed directly with the Euler-Maclaurin tail."""
    s = mpmath.mpc(s.real, s.imag)
    n = mpmath.mpf(terms)
    partial = mpmath.fsum(mpmath.power(k, -s) for k in range(1, terms + 1))
    tail = n ** (1 - s) / (s - 1) - n**-s / 2 + s * n ** (-s - 1) / 12
    return complex(partial + tail)


def log_derivative_oracle(s: float) -> float:
    """zeta'(s) / zeta(s) = -sum Lambda(n) n^-s."""
    return float(mpmath.zeta(s, derivative=1) / mpmath.zeta(s))


@pytest.fixture
def no_drop_settings():
    """Settings that keep every atom, however small."""
    return dataclasses.replace(DEFAULT_SETTINGS, atom_rel_threshold=0.0, weight_floor=0.0)


@pytest.fixture
def small_policy():
    return TruncationPolicy(prime_limit=10_000)
