"""
Witness search: find t0 with D(t0) = log |f_sigma(t0)| > 0.

A positive D at any point proves f_sigma is not a characteristic function.
The search runs along lines t = T * v0, on which every atom at x contributes
mass * (cos(T <x, v0>) - 1) to D. Candidates come from a coarse atom set on a
grid in T, are refined with a bounded scalar optimizer and are certified with
the full log series: a witness needs D - 2 * tail > 0.

Lines tried, in order:
- direction-isolating lines (<a_j, v0> = delta_jh) for each LI direction group
  h that carries negative mass;
- the reduction line with <a_l, v0> = omega_l, omega = (1, sqrt 2, sqrt 3, ...)
  for LI directions or the declared psi for LR directions.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from zeta_dist.arith import sieve
from zeta_dist.classify import (
    DirectionCondition,
    DirectionKind,
    condition_of_vectors,
    direction_condition,
    group_directions,
)
from zeta_dist.config import DEFAULT_SETTINGS, Settings
from zeta_dist.errors import DomainError, TargetDerivationError
from zeta_dist.levy import LevyMeasure, enumerate_atoms
from zeta_dist.product import (
    EvalPoint,
    SpecLike,
    TruncationPolicy,
    Vector,
    convergence_margin,
    eval_log,
    tail_bound,
    validate,
)

logger = logging.getLogger(__name__)

TARGET_SCAN_LIMIT = 10_000
RESIDUAL_LIMIT = 0.5


class SearchStrategy(Enum):
    DIRECT_MAX = "direct"
    KRONECKER_TARGETS = "kronecker"


@dataclass(frozen=True)
class PhaseTargets:
    """Primes whose phases should align to +1 (plus) or -1 (minus)."""

    plus_primes: Tuple[int, ...]
    minus_primes: Tuple[int, ...]
    K: int
    directions: Dict[int, Vector] = field(default_factory=dict)  # prime -> w of its first power

    def to_dict(self) -> Dict[str, Any]:
        return {"plus": list(self.plus_primes), "minus": list(self.minus_primes), "K": self.K}


@dataclass(frozen=True)
class Reduction:
    """A search line t = T * v0 with <a_l, v0> = omega_l per direction group."""

    v0: Tuple[float, ...]
    omegas: Tuple[float, ...]
    kind: str
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v0": list(self.v0),
            "omegas": list(self.omegas),
            "kind": self.kind,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class Witness:
    """t0 = T * v0 with certified D(t0) > 0."""

    t0: Tuple[float, ...]
    T: float
    v0: Tuple[float, ...]
    D_value: float
    tail: float
    certified_margin: float
    policy: TruncationPolicy
    strategy: SearchStrategy
    budget_used: int
    line: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t0": list(self.t0),
            "T": self.T,
            "v0": list(self.v0),
            "D": self.D_value,
            "certified_margin": self.certified_margin,
            "tail": self.tail,
            "policy": self.policy.to_dict(),
            "strategy": self.strategy.value,
            "budget_used": self.budget_used,
            "line": self.line,
        }


@dataclass
class SearchResult:
    witness: Optional[Witness]
    evaluations: int
    max_d_observed: float
    lines: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.witness is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "found": self.found,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "evaluations": self.evaluations,
            "max_d_observed": self.max_d_observed,
            "lines": self.lines,
        }


def objective_D(
    spec: SpecLike,
    sigma: Sequence[float],
    t: Sequence[float],
    policy: TruncationPolicy = TruncationPolicy(),
) -> Tuple[float, float]:
    """D(t) = Re log Z_E(sigma + i t) - Re log Z_E(sigma), with tail 2 * tail_bound."""
    at_t, tail = eval_log(spec, EvalPoint(tuple(sigma), tuple(t)), policy)
    at_0, _ = eval_log(spec, EvalPoint.real(sigma), policy)
    return at_t.real - at_0.real, 2.0 * tail


def _no_drop(settings: Settings) -> Settings:
    return dataclasses.replace(settings, atom_rel_threshold=0.0, weight_floor=0.0)


def derive_targets(
    spec: SpecLike,
    sigma: Sequence[float],
    K: int = DEFAULT_SETTINGS.witness.target_cutoff,
    settings: Settings = DEFAULT_SETTINGS,
) -> PhaseTargets:
    """
    Minus primes carry a negative first-power atom; plus primes are the other
    primes <= 2K with a positive one.
    """
    vspec = validate(spec)
    group_dirs = [g.direction for g in group_directions(vspec)]

    def first_powers(limit: int) -> Dict[int, Tuple[float, Vector]]:
        measure = enumerate_atoms(
            vspec, sigma, TruncationPolicy(prime_limit=max(2, limit)), _no_drop(settings)
        )
        out: Dict[int, Tuple[float, Vector]] = {}
        for atom in measure.atoms:
            if atom.w not in group_dirs:
                continue
            seen = out.get(atom.p)
            # the negative atom wins; otherwise keep the heaviest
            if seen is None or atom.mass < 0 <= seen[0] or (
                (atom.mass < 0) == (seen[0] < 0) and abs(atom.mass) > abs(seen[0])
            ):
                out[atom.p] = (atom.mass, atom.w)
        return out

    powers = first_powers(2 * K)
    minus = sorted(p for p, (m, _) in powers.items() if m < 0)
    if not minus:
        wide = first_powers(TARGET_SCAN_LIMIT)
        negative = sorted(p for p, (m, _) in wide.items() if m < 0)
        if not negative:
            raise TargetDerivationError(
                "no negative first-power contribution; nothing to witness",
                {"K": K, "scanned_to": TARGET_SCAN_LIMIT},
            )
        minus = negative[:1]
        powers[minus[0]] = wide[minus[0]]
    plus = sorted(p for p, (m, _) in powers.items() if m > 0 and p <= 2 * K and p not in minus)
    directions = {p: powers[p][1] for p in plus + minus}
    return PhaseTargets(tuple(plus), tuple(minus), K, directions)


def _omega_defaults(count: int) -> List[float]:
    """(1, sqrt 2, sqrt 3, sqrt 5, ...): 1 followed by square roots of primes."""
    if count <= 1:
        return [1.0][:count] or [1.0]
    limit = 16
    while len(sieve(limit)) < count - 1:
        limit *= 2
    return [1.0] + [math.sqrt(float(p)) for p in sieve(limit).primes[: count - 1]]


def reduce_direction(spec: SpecLike, mode: Optional[DirectionCondition] = None) -> Reduction:
    """Reduce the search to one real parameter T along t = T * v0."""
    vspec = validate(spec)
    groups = group_directions(vspec)
    dirs = np.array([[float(x) for x in g.direction] for g in groups], dtype=np.float64)

    if len(groups) == 1:
        a = dirs[0]
        return Reduction(tuple(a / float(a @ a)), (1.0,), "single")

    if mode is None:
        mode = direction_condition(vspec) if len(groups) == vspec.spec.phi else None
        if mode is None:
            mode = condition_of_vectors([g.direction for g in groups], vspec)

    if mode.mode is DirectionKind.LI:
        omegas = np.array(_omega_defaults(len(groups)))
        v0, *_ = np.linalg.lstsq(dirs, omegas, rcond=None)
        return Reduction(tuple(float(x) for x in v0), tuple(float(w) for w in omegas), "LI")

    if mode.mode is DirectionKind.LR:
        hint = vspec.spec.direction_mode_hint
        assert hint is not None
        a = np.array([float(x) for x in vspec.spec.directions[0]])
        v0 = a / float(a @ a)
        return Reduction(tuple(float(x) for x in v0), tuple(float(psi) for psi in hint.psi), "LR")

    # collinear or mixed: scalar search along the first direction
    a = dirs[0]
    v0 = a / float(a @ a)
    omegas = dirs @ v0
    logger.info("direction reduction degenerate (%s)", mode.mode.value)
    return Reduction(
        tuple(float(x) for x in v0), tuple(float(w) for w in omegas), mode.mode.value, True
    )


def _isolating_lines(vspec, measure: LevyMeasure) -> List[Reduction]:
    groups = group_directions(vspec)
    if len(groups) < 2:
        return []
    if condition_of_vectors([g.direction for g in groups], vspec).mode is not DirectionKind.LI:
        return []
    row_to_group = {row + 1: gi for gi, g in enumerate(groups) for row in g.rows}
    negative_groups = sorted(
        {
            row_to_group[l]
            for i in np.flatnonzero(measure.masses < 0).tolist()
            for l, _ in measure.classes[int(measure.class_index[i])].sources
        }
    )
    dirs = np.array([[float(x) for x in g.direction] for g in groups], dtype=np.float64)
    lines = []
    for h in negative_groups:
        target = np.zeros(len(groups))
        target[h] = 1.0
        v0, *_ = np.linalg.lstsq(dirs, target, rcond=None)
        lines.append(
            Reduction(tuple(float(x) for x in v0), tuple(target.tolist()), f"isolate:{h + 1}")
        )
    return lines


@dataclass(frozen=True)
class _Line:
    reduction: Reduction
    masses: np.ndarray
    freqs: np.ndarray
    coarse_err: float
    target_freqs: np.ndarray
    target_signs: np.ndarray  # +1 plus, -1 minus


def _coarse_atoms(measure: LevyMeasure, v0: np.ndarray, settings: Settings) -> Tuple[np.ndarray, np.ndarray, float]:
    freqs = measure.locations @ v0
    weights = np.abs(measure.masses)
    order = np.argsort(-weights, kind="stable")
    total = float(weights.sum())
    kept = []
    dropped = total
    for i in order.tolist():
        if dropped <= settings.witness.coarse_mass_fraction * total:
            break
        if len(kept) >= settings.witness.max_coarse_atoms:
            break
        if freqs[i] == 0.0:
            dropped -= weights[i]  # cos(0) - 1 = 0 on this line
            continue
        kept.append(i)
        dropped -= weights[i]
    idx = np.asarray(kept, dtype=np.int64)
    return measure.masses[idx], freqs[idx], 2.0 * max(dropped, 0.0)


def _d_coarse(line: _Line, T: np.ndarray) -> np.ndarray:
    phase = np.multiply.outer(T, line.freqs)
    return (-2.0 * np.sin(phase / 2.0) ** 2) @ line.masses


def _residual(line: _Line, T: np.ndarray) -> np.ndarray:
    phase = np.multiply.outer(T, line.target_freqs)
    # |e^{i theta} - s|^2 = 2 - 2 s cos(theta)
    return (2.0 - 2.0 * line.target_signs * np.cos(phase)).sum(axis=1)


def _local_max(values: np.ndarray) -> np.ndarray:
    left = np.concatenate(([-np.inf], values[:-1]))
    right = np.concatenate((values[1:], [-np.inf]))
    return np.flatnonzero((values >= left) & (values >= right))


class _Budget:
    def __init__(self, total: int) -> None:
        self.total = total
        self.used = 0

    @property
    def left(self) -> int:
        return self.total - self.used

    def spend(self, n: int) -> None:
        self.used += n


def _refine(fun, center: float, half_width: float, iterations: int, budget: _Budget) -> float:
    lo, hi = max(center - half_width, 1e-12), center + half_width
    at_center = fun(center)
    res = minimize_scalar(
        fun, bounds=(lo, hi), method="bounded",
        options={"maxiter": max(1, min(iterations, budget.left)), "xatol": half_width * 1e-6},
    )
    budget.spend(int(res.nfev) + 1)
    return float(res.x) if float(res.fun) <= at_center else center


def search(
    spec: SpecLike,
    sigma: Sequence[float],
    strategy: SearchStrategy = SearchStrategy.DIRECT_MAX,
    budget: int = 10**6,
    policy: TruncationPolicy = TruncationPolicy(),
    settings: Settings = DEFAULT_SETTINGS,
    threads: int = 1,
) -> SearchResult:
    """Scan search lines for a certified witness within the evaluation budget."""
    if budget <= 0:
        raise DomainError(f"budget must be positive, got {budget}", {"budget": budget})
    vspec = validate(spec)
    v = convergence_margin(vspec, sigma)
    if v <= 1:
        raise DomainError(f"sigma outside the region of absolute convergence (v = {v} <= 1)",
                          {"sigma": list(sigma), "v": v})
    ws = settings.witness
    resolved = policy.resolved(v, vspec.m, settings)
    measure = enumerate_atoms(vspec, sigma, resolved, settings)
    full_tail = 2.0 * tail_bound(resolved, v, vspec.m)

    targets: Optional[PhaseTargets] = None
    if strategy is SearchStrategy.KRONECKER_TARGETS:
        try:
            targets = derive_targets(vspec, sigma, ws.target_cutoff, settings)
        except TargetDerivationError as exc:
            logger.info("no phase targets: %s", exc.message)
            return SearchResult(None, 0, 0.0, [{"skipped": exc.message}])

    reductions = _isolating_lines(vspec, measure) + [reduce_direction(vspec)]
    tracker = _Budget(budget)
    max_d = -math.inf
    line_log: List[Dict[str, Any]] = []

    for reduction in reductions:
        if tracker.left <= 0:
            break
        v0 = np.asarray(reduction.v0)
        masses, freqs, coarse_err = _coarse_atoms(measure, v0, settings)
        if freqs.size == 0:
            line_log.append({**reduction.to_dict(), "skipped": "no atom moves on this line"})
            continue
        if targets is not None:
            tf = np.array([float(np.dot([float(x) for x in targets.directions[p]], v0)) * math.log(p)
                           for p in targets.plus_primes + targets.minus_primes])
            ts = np.array([1.0] * len(targets.plus_primes) + [-1.0] * len(targets.minus_primes))
            moving_minus = [f for f, s in zip(tf, ts) if s < 0 and f != 0.0]
            if not moving_minus:
                line_log.append({**reduction.to_dict(), "skipped": "no minus target on this line"})
                continue
        else:
            tf, ts = np.zeros(0), np.zeros(0)
        line = _Line(reduction, masses, freqs, coarse_err, tf, ts)

        before = tracker.used
        witness, line_max = _scan_line(
            vspec, sigma, line, strategy, resolved, full_tail, ws, tracker, threads
        )
        max_d = max(max_d, line_max)
        line_log.append({**reduction.to_dict(), "evaluations": tracker.used - before,
                         "coarse_error": coarse_err,
                         "max_d": line_max if line_max > -math.inf else None})
        logger.info("line %s: %d evaluations, max D %.3g", reduction.kind,
                    tracker.used - before, line_max)
        if witness is not None:
            return SearchResult(witness, tracker.used, max_d, line_log)

    return SearchResult(None, tracker.used, max_d if max_d > -math.inf else 0.0, line_log)


def _scan_line(
    vspec,
    sigma: Sequence[float],
    line: _Line,
    strategy: SearchStrategy,
    policy: TruncationPolicy,
    full_tail: float,
    ws,
    tracker: _Budget,
    threads: int,
) -> Tuple[Optional[Witness], float]:
    kronecker = strategy is SearchStrategy.KRONECKER_TARGETS
    if kronecker:
        step = ws.kronecker_resolution / float(np.max(np.abs(line.target_freqs)))
    else:
        step = ws.phase_resolution / float(np.max(np.abs(line.freqs)))
    chunk = ws.chunk_size
    certifications = 0
    max_d = -math.inf
    start_index = 1  # T = 0 is excluded

    def evaluate(first: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        T = (first + np.arange(chunk)) * step
        d = _d_coarse(line, T)
        score = _residual(line, T) if kronecker else -d
        return T, d, score

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while tracker.left > 0 and start_index * step <= ws.t_max:
            firsts = [start_index + j * chunk for j in range(max(1, threads))]
            if pool is not None:
                batches = list(pool.map(evaluate, firsts))
            else:
                batches = [evaluate(f) for f in firsts]
            start_index = firsts[-1] + chunk

            # sequential reduction: lowest T wins regardless of worker count
            for T, d, score in batches:
                n = min(T.size, tracker.left)
                if n <= 0:
                    break
                T, d, score = T[:n], d[:n], score[:n]
                in_range = T <= ws.t_max
                T, d, score = T[in_range], d[in_range], score[in_range]
                tracker.spend(n)
                if T.size == 0:
                    break
                max_d = max(max_d, float(d.max()))

                for i in _local_max(-score).tolist():
                    if not kronecker and d[i] <= 0:
                        continue
                    if certifications >= ws.max_certifications or tracker.left <= 0:
                        break
                    if kronecker:
                        T_star = _refine(lambda x: float(_residual(line, np.array([x]))[0]),
                                         float(T[i]), step, ws.refine_iterations, tracker)
                        phases = T_star * line.target_freqs
                        gaps = np.abs(np.exp(1j * phases) - line.target_signs)
                        if np.any(gaps >= RESIDUAL_LIMIT):
                            continue
                        tracker.spend(1)
                        if float(_d_coarse(line, np.array([T_star]))[0]) <= 0:
                            continue
                    else:
                        T_star = _refine(lambda x: -float(_d_coarse(line, np.array([x]))[0]),
                                         float(T[i]), step, ws.refine_iterations, tracker)
                    certifications += 1
                    witness = _certify(vspec, sigma, line, T_star, policy, strategy, tracker)
                    max_d = max(max_d, witness.D_value if witness else -math.inf)
                    if witness is not None and witness.certified_margin > 0:
                        return witness, max_d
                if tracker.left <= 0:
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    return None, max_d


def _certify(
    vspec,
    sigma: Sequence[float],
    line: _Line,
    T: float,
    policy: TruncationPolicy,
    strategy: SearchStrategy,
    tracker: _Budget,
) -> Optional[Witness]:
    v0 = line.reduction.v0
    t0 = tuple(T * x for x in v0)
    D, tail = objective_D(vspec, sigma, t0, policy)
    tracker.spend(1)
    logger.debug("certify T=%.9g: D=%.6g tail=%.3g", T, D, tail)
    return Witness(
        t0=t0,
        T=T,
        v0=tuple(v0),
        D_value=D,
        tail=tail,
        certified_margin=D - tail,
        policy=policy,
        strategy=strategy,
        budget_used=tracker.used,
        line=line.reduction.to_dict(),
    )


def recertify(
    witness: Witness,
    spec: SpecLike,
    sigma: Sequence[float],
    policy: TruncationPolicy,
) -> Witness:
    """Re-evaluate D at t0 under another (typically doubled) policy."""
    D, tail = objective_D(spec, sigma, witness.t0, policy)
    return dataclasses.replace(
        witness, D_value=D, tail=tail, certified_margin=D - tail, policy=policy
    )


def doubled_policy(spec: SpecLike, sigma: Sequence[float], policy: TruncationPolicy) -> TruncationPolicy:
    """(2P, 2R) with R resolved against the spec's convergence margin."""
    return policy.doubled(convergence_margin(spec, sigma))


__all__ = [
    "PhaseTargets",
    "Reduction",
    "SearchResult",
    "SearchStrategy",
    "Witness",
    "derive_targets",
    "doubled_policy",
    "objective_D",
    "recertify",
    "reduce_direction",
    "search",
]
