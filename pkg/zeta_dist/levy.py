"""
Finite Levy measures of multidimensional polynomial Euler products.

    N_sigma = sum_p sum_r sum_{l,k} (1/r) alpha_lk(p)^r p^{-r <a_l, sigma>} delta_{(r log p) a_l}

Atoms are merged on the exact key (p, w) with w = r * a_l in lowest terms, so
that e.g. (a = 1, r = 2) and (a = 2, r = 1) collide at 2 log p. Merged
coefficients are summed in rational arithmetic and rounded once.

Sign convention: atoms sit at +x and the random variable jumps by -x, so the
characteristic function is exp(sum mass * (exp(-i <t, x>) - 1)).
"""

import csv
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from zeta_dist.arith import sieve
from zeta_dist.config import DEFAULT_SETTINGS, Settings
from zeta_dist.errors import DomainError, NotADistributionError
from zeta_dist.product import (
    EvalPoint,
    SpecLike,
    TruncationPolicy,
    Vector,
    convergence_margin,
    dirichlet_coefficients,
    dot_fraction,
    eval_log,
    tail_bound,
    validate,
)

logger = logging.getLogger(__name__)


def atom_weight(p: int, exponent: Fraction) -> float:
    """p^-exponent in binary64; the single rounding point of every atom mass."""
    return math.exp(-float(exponent) * math.log(p))


@dataclass(frozen=True)
class LevyAtom:
    """One merged atom at (log p) * w."""

    p: int
    w: Vector
    l: int  # 1-based direction index of the lowest contribution
    r: int
    mass: float
    coefficient: Optional[Fraction] = None  # exact sum of alpha^r / r when available
    sources: Tuple[Tuple[int, int], ...] = ()  # every (l, r) merged here

    @property
    def location(self) -> Tuple[float, ...]:
        log_p = math.log(self.p)
        return tuple(float(x) * log_p for x in self.w)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "r": self.r,
            "l": self.l,
            "w": [str(x) for x in self.w],
            "mass": self.mass,
            "location": list(self.location),
            "coefficient": None if self.coefficient is None else str(self.coefficient),
            "sources": [list(s) for s in self.sources],
        }


@dataclass(frozen=True)
class _AtomClass:
    """What every atom sharing a (w, coefficient pattern) has in common."""

    w_index: int
    parts: Tuple[Tuple[Fraction, Fraction], ...]  # (exact coefficient, exponent) pairs
    sources: Tuple[Tuple[int, int], ...]

    @property
    def coefficient(self) -> Optional[Fraction]:
        return self.parts[0][0] if len(self.parts) == 1 else None


@dataclass(frozen=True, eq=False)
class LevyMeasure:
    """
    Columnar store of merged atoms.

    Row i is the atom at prime primes[i] and exact vector w_table[w_index[i]].
    """

    d: int
    sigma: Tuple[float, ...]
    policy: TruncationPolicy
    omitted_tail: float
    primes: np.ndarray
    w_index: np.ndarray
    masses: np.ndarray
    class_index: np.ndarray
    w_table: Tuple[Vector, ...]
    classes: Tuple[_AtomClass, ...]
    spec_name: str = ""

    def __len__(self) -> int:
        return int(self.masses.size)

    @cached_property
    def locations(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros((0, self.d))
        w = np.array([[float(x) for x in vec] for vec in self.w_table], dtype=np.float64)
        return w[self.w_index] * np.log(self.primes.astype(np.float64))[:, None]

    @cached_property
    def atoms(self) -> Tuple[LevyAtom, ...]:
        out = []
        for i in range(len(self)):
            cls = self.classes[int(self.class_index[i])]
            l, r = cls.sources[0]
            out.append(
                LevyAtom(
                    p=int(self.primes[i]),
                    w=self.w_table[int(self.w_index[i])],
                    l=l,
                    r=r,
                    mass=float(self.masses[i]),
                    coefficient=cls.coefficient,
                    sources=cls.sources,
                )
            )
        return tuple(out)

    def atom_at(self, p: int, w: Sequence[Fraction]) -> Optional[LevyAtom]:
        key = tuple(Fraction(x) for x in w)
        try:
            wi = self.w_table.index(key)
        except ValueError:
            return None
        hits = np.flatnonzero((self.primes == p) & (self.w_index == wi))
        return self.atoms[int(hits[0])] if hits.size else None

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.masses >= 0))

    def summary(self) -> Dict[str, Any]:
        return {
            "atoms": len(self),
            "total_mass": total_mass(self),
            "omitted_tail": self.omitted_tail,
            "sigma": list(self.sigma),
            "policy": self.policy.to_dict(),
            "spec": self.spec_name,
        }


def _merge_plan(directions: Sequence[Vector], rows, powers: int) -> Dict[Vector, List[Tuple[int, int, int]]]:
    """w -> contributions (l, k, r) with r * a_l = w."""
    plan: Dict[Vector, List[Tuple[int, int, int]]] = defaultdict(list)
    for l, k, scheme in rows:
        if scheme.is_zero:
            continue
        for r in range(1, powers + 1):
            plan[tuple(r * x for x in directions[l])].append((l, k, r))
    return plan


def _enumerate_chunk(
    primes: np.ndarray,
    w_table: Sequence[Vector],
    plan: Dict[Vector, List[Tuple[int, int, int]]],
    schemes: Dict[Tuple[int, int], Any],
    sigma: Sequence[float],
    weight_floor: float,
) -> Tuple[List[Tuple[np.ndarray, int, np.ndarray, List[_AtomClass]]], float]:
    """Candidate atoms of one prime chunk, before the relative threshold."""
    logs = np.log(primes.astype(np.float64))
    decomposed = {key: scheme.decompose(primes) for key, scheme in schemes.items()}
    out = []
    dropped = 0.0

    for wi, w in enumerate(w_table):
        contributions = plan[w]
        base_exponent = dot_fraction(w, sigma)
        rows = sorted({(l, k) for l, k, _ in contributions})
        radix = [len(decomposed[row][1]) for row in rows]
        key = np.zeros(primes.size, dtype=np.int64)
        for row, base in zip(rows, radix):
            key = key * base + decomposed[row][0]
        uniq, inverse = np.unique(key, return_inverse=True)

        classes: List[_AtomClass] = []
        approx = np.zeros(uniq.size)
        for u, packed in enumerate(uniq.tolist()):
            codes: Dict[Tuple[int, int], int] = {}
            for row, base in zip(reversed(rows), reversed(radix)):
                codes[row] = packed % base
                packed //= base
            parts: Dict[Fraction, Fraction] = defaultdict(Fraction)
            sources = []
            for l, k, r in contributions:
                _, values, shift = decomposed[(l, k)]
                value = values[codes[(l, k)]]
                if value == 0:
                    continue
                parts[base_exponent + r * shift] += value**r / r
                sources.append((l + 1, r))
            kept = tuple(sorted(((c, e) for e, c in parts.items() if c != 0), key=lambda ce: ce[1]))
            classes.append(_AtomClass(wi, kept, tuple(sorted(set(sources)))))
            approx[u] = sum(abs(float(c)) for c, _ in kept) if kept else 0.0

        # envelope weight p^-min(exponent) bounds every part of the atom
        min_exp = np.array(
            [float(min((e for _, e in cls.parts), default=base_exponent)) for cls in classes]
        )
        envelope = approx[inverse] * np.exp(-min_exp[inverse] * logs)
        live = approx[inverse] > 0
        floor_hit = live & (envelope < weight_floor)
        dropped += math.fsum(envelope[floor_hit])
        keep = np.flatnonzero(live & ~floor_hit)
        out.append((keep, wi, inverse[keep], classes))
    return out, dropped


def enumerate_atoms(
    spec: SpecLike,
    sigma: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
    settings: Settings = DEFAULT_SETTINGS,
    threads: int = 1,
) -> LevyMeasure:
    """All merged atoms with p <= P and r <= R; omitted_tail covers the rest."""
    vspec = validate(spec)
    v = convergence_margin(vspec, sigma)
    if v <= 1:
        raise DomainError(f"sigma outside the region of absolute convergence (v = {v} <= 1)",
                          {"sigma": list(sigma), "v": v})
    resolved = policy.resolved(v, vspec.m, settings)
    assert resolved.power_limit is not None
    table = sieve(resolved.prime_limit)
    sigma = tuple(float(x) for x in sigma)

    rows = vspec.spec.rows()
    plan = _merge_plan(vspec.directions, rows, resolved.power_limit)
    w_table = tuple(sorted(plan))
    schemes = {(l, k): s for l, k, s in rows if not s.is_zero}

    chunks = np.array_split(table.primes, max(1, threads)) if threads > 1 else [table.primes]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda c: _enumerate_chunk(c, w_table, plan, schemes, sigma,
                                               settings.weight_floor),
                    chunks,
                )
            )
    else:
        results = [_enumerate_chunk(chunks[0], w_table, plan, schemes, sigma,
                                    settings.weight_floor)]

    # exact masses, one rounding each; classes are renumbered into one table
    all_classes: List[_AtomClass] = []
    class_ids: Dict[Tuple[int, Tuple, Tuple], int] = {}
    col_p, col_w, col_m, col_c = [], [], [], []
    dropped = 0.0
    for chunk, (per_w, chunk_dropped) in zip(chunks, results):
        dropped += chunk_dropped
        chunk_primes = chunk.tolist()
        for keep, wi, inverse, classes in per_w:
            float_parts = [[(float(c), e) for c, e in cls.parts] for cls in classes]
            global_ids = []
            for cls in classes:
                ident = (cls.w_index, cls.parts, cls.sources)
                if cls.parts and ident not in class_ids:
                    class_ids[ident] = len(all_classes)
                    all_classes.append(cls)
                global_ids.append(class_ids.get(ident, -1))
            for idx, ci in zip(keep.tolist(), inverse.tolist()):
                if global_ids[ci] < 0:
                    continue
                p = chunk_primes[idx]
                mass = math.fsum(c * atom_weight(p, e) for c, e in float_parts[ci])
                if mass == 0.0:
                    continue
                col_p.append(p)
                col_w.append(wi)
                col_m.append(mass)
                col_c.append(global_ids[ci])

    primes = np.asarray(col_p, dtype=np.int64)
    w_index = np.asarray(col_w, dtype=np.int64)
    masses = np.asarray(col_m, dtype=np.float64)
    class_index = np.asarray(col_c, dtype=np.int64)

    if masses.size:
        threshold = settings.atom_rel_threshold * math.fsum(np.abs(masses))
        small = np.abs(masses) < threshold
        dropped += math.fsum(np.abs(masses[small]))
        primes, w_index, masses, class_index = (
            primes[~small], w_index[~small], masses[~small], class_index[~small]
        )
        order = np.lexsort((w_index, primes))
        primes, w_index, masses, class_index = (
            primes[order], w_index[order], masses[order], class_index[order]
        )

    for arr in (primes, w_index, masses, class_index):
        arr.setflags(write=False)

    tail = tail_bound(resolved, v, vspec.m) + dropped
    logger.info(
        "enumerated %d atoms (P=%d, R=%d), dropped mass %.3g, omitted tail %.3g",
        masses.size, resolved.prime_limit, resolved.power_limit, dropped, tail,
    )
    return LevyMeasure(
        d=vspec.d,
        sigma=sigma,
        policy=resolved,
        omitted_tail=tail,
        primes=primes,
        w_index=w_index,
        masses=masses,
        class_index=class_index,
        w_table=w_table,
        classes=tuple(all_classes),
        spec_name=vspec.spec.name,
    )


def total_mass(measure: LevyMeasure) -> float:
    """c = sum of masses; equals Re log Z_E(sigma) up to the omitted tail."""
    return math.fsum(measure.masses)


def log_cf_from_atoms(measure: LevyMeasure, t: Sequence[float]) -> complex:
    if len(t) != measure.d:
        raise DomainError(f"t has {len(t)} components, measure has d = {measure.d}",
                          {"t": list(t)})
    if len(measure) == 0:
        return complex(0.0, 0.0)
    theta = measure.locations @ np.asarray(t, dtype=np.float64)
    # cos(theta) - 1 = -2 sin^2(theta / 2) keeps small angles accurate
    real = -2.0 * measure.masses * np.sin(theta / 2.0) ** 2
    imag = -measure.masses * np.sin(theta)
    return complex(math.fsum(real), math.fsum(imag))


def cf_from_atoms(measure: LevyMeasure, t: Sequence[float]) -> complex:
    """exp(sum mass * (exp(-i <t, x>) - 1))."""
    return complex(np.exp(log_cf_from_atoms(measure, t)))


def cumulant(measure: LevyMeasure, order: Sequence[int]) -> float:
    """Mixed cumulant for multi-index kappa: sum mass * prod_j (-x_j)^kappa_j."""
    kappa = [int(k) for k in order]
    if len(kappa) != measure.d:
        raise DomainError(f"order has {len(kappa)} entries, measure has d = {measure.d}",
                          {"order": kappa})
    if any(k < 0 for k in kappa) or sum(kappa) == 0:
        raise DomainError("cumulant order must be a nonzero multi-index", {"order": kappa})
    if sum(kappa) > 4:
        raise DomainError("cumulants are supported up to total order 4", {"order": kappa})
    if len(measure) == 0:
        return 0.0
    factor = np.prod((-measure.locations) ** np.asarray(kappa), axis=1)
    return math.fsum(measure.masses * factor)


def cumulant_error_estimate(measure: LevyMeasure, order: Sequence[int]) -> float:
    """omitted_tail * max|x|^|kappa| over the twice-enlarged atom envelope."""
    reach = 2.0 * float(np.max(np.abs(measure.locations))) if len(measure) else 1.0
    return measure.omitted_tail * max(reach, 1.0) ** sum(order)


def absolute_moment(measure: LevyMeasure, k: int) -> float:
    """sum |mass| * |x|^k."""
    if k < 0:
        raise DomainError("moment order must be >= 0", {"k": k})
    if len(measure) == 0:
        return 0.0
    norms = np.linalg.norm(measure.locations, axis=1)
    return math.fsum(np.abs(measure.masses) * norms**k)


def mass_upper_bound(v: float, m: int) -> float:
    """2m (zeta(v) - 1), the bound on total absolute mass."""
    if v <= 1:
        raise DomainError(f"mass bound needs v > 1, got {v}", {"v": v})
    return float(2 * m * (mpmath.zeta(v) - 1))


@dataclass(frozen=True)
class LKTriplet:
    """(A, nu, gamma0) in the compound Poisson normal form."""

    gaussian: np.ndarray
    nu: LevyMeasure
    drift: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "A": self.gaussian.tolist(),
            "nu": self.nu.summary(),
            "gamma0": self.drift.tolist(),
        }


def lk_triplet(measure: LevyMeasure) -> LKTriplet:
    """Levy-Khintchine triplet of a nonnegative finite measure: (0, N, 0)."""
    negative = np.flatnonzero(measure.masses < 0)
    if negative.size:
        atom = measure.atoms[int(negative[0])]
        raise NotADistributionError(
            "measure has negative atoms; no Levy-Khintchine triplet", {"atom": atom.to_dict()}
        )
    return LKTriplet(np.zeros((measure.d, measure.d)), measure, np.zeros(measure.d))


@dataclass(frozen=True)
class ZetaPmf:
    """Point masses mu({-(log n) a}) of a single-direction zeta distribution."""

    direction: Vector
    probabilities: Dict[int, float]
    negative: Tuple[int, ...]

    def location(self, n: int) -> Tuple[float, ...]:
        return tuple(-float(x) * math.log(n) for x in self.direction)


def zeta_pmf(
    spec: SpecLike,
    sigma: Sequence[float],
    n_max: int,
    policy: TruncationPolicy = TruncationPolicy(),
) -> ZetaPmf:
    """C(n) n^-<a, sigma> / Z_E(sigma) for n <= n_max, C the product of all row series."""
    vspec = validate(spec)
    if len(set(vspec.directions)) != 1:
        raise DomainError("zeta_pmf needs every direction to be the same vector",
                          {"distinct_directions": len(set(vspec.directions))})
    a = vspec.directions[0]
    log_z, _ = eval_log(vspec, EvalPoint.real(sigma), policy)
    z_value = math.exp(log_z.real)

    combined: List[Any] = [Fraction(0)] * (n_max + 1)
    combined[1] = Fraction(1)
    for series in dirichlet_coefficients(vspec, n_max).values():
        product: List[Any] = [Fraction(0)] * (n_max + 1)
        for i in range(1, n_max + 1):
            if combined[i] == 0:
                continue
            for j in range(1, n_max // i + 1):
                if series[j] != 0:
                    product[i * j] += combined[i] * series[j]
        combined = product

    exponent = dot_fraction(a, sigma)
    probabilities = {
        n: float(combined[n]) * atom_weight(n, exponent) / z_value if n > 1
        else float(combined[1]) / z_value
        for n in range(1, n_max + 1)
        if combined[n] != 0
    }
    negative = tuple(n for n, c in enumerate(combined) if n >= 1 and c < 0)
    if negative:
        logger.warning("zeta_pmf: negative coefficients at n = %s", list(negative[:10]))
    return ZetaPmf(direction=a, probabilities=probabilities, negative=negative)


def export_atoms(measure: LevyMeasure, csv_path: Path) -> Path:
    """Write the atom CSV and its JSON sidecar; returns the sidecar path."""
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["p", "r", "l", "mass"] + [f"x_{j + 1}" for j in range(measure.d)])
        for atom in measure.atoms:
            writer.writerow(
                [atom.p, atom.r, atom.l, repr(atom.mass)] + [repr(x) for x in atom.location]
            )
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(
            {
                "total_mass": total_mass(measure),
                "omitted_tail": measure.omitted_tail,
                "sigma": list(measure.sigma),
                "policy": measure.policy.to_dict(),
            },
            indent=2,
        )
        + "\n"
    )
    return sidecar
