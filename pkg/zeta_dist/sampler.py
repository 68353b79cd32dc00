"""
Seeded sampling from the compound Poisson law of a nonnegative Levy measure.

Each draw is X = -(x_1 + ... + x_K) with K ~ Poisson(c), c the total mass, and
jumps x_j drawn from the atom table with probability mass / c.

Random streams: numpy's Philox4x64 counter-based generator keyed by the seed.
Draws are produced in blocks of `sampler.block_size`; block b uses
Philox(key=seed).jumped(b) and draws, in this order, one uniform per sample
for K and then one uniform per jump. Blocks never share state, so any number
of workers produces the same batch bit for bit.
"""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from zeta_dist.config import DEFAULT_SETTINGS, Settings
from zeta_dist.errors import DomainError, NotADistributionError
from zeta_dist.levy import LevyMeasure, total_mass

logger = logging.getLogger(__name__)

RNG_NAME = "numpy.random.Philox (4x64-10), key=seed, block b = jumped(b)"


def _running_sum(values: np.ndarray) -> np.ndarray:
    """Cumulative sums with Neumaier compensation."""
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for i, x in enumerate(values.tolist()):
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
        out[i] = total + comp
    return out


@dataclass
class SamplerState:
    """Atom table sorted by descending mass, with cumulative sums and rate c."""

    seed: int
    measure: LevyMeasure
    order: np.ndarray
    cumulative: np.ndarray
    rate: float
    bias_bound: float

    @classmethod
    def from_measure(cls, measure: LevyMeasure, seed: int) -> "SamplerState":
        negative = np.flatnonzero(measure.masses < 0)
        if negative.size:
            atom = measure.atoms[int(negative[0])]
            raise NotADistributionError(
                "cannot sample a measure with negative atoms", {"atom": atom.to_dict()}
            )
        if seed < 0:
            raise DomainError(f"seed must be >= 0, got {seed}", {"seed": seed})
        order = np.argsort(-measure.masses, kind="stable")
        cumulative = _running_sum(measure.masses[order])
        rate = total_mass(measure)
        bias = measure.omitted_tail / rate if rate > 0 else measure.omitted_tail
        return cls(seed, measure, order, cumulative, rate, bias)

    def generator(self, block: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed).jumped(block))


@dataclass(frozen=True)
class SampleBatch:
    """n draws plus the jump records that produced them (CSR layout)."""

    values: np.ndarray
    seed: int
    n: int
    rate: float
    bias_bound: float
    jump_offsets: np.ndarray
    jump_atoms: np.ndarray  # row indices into the measure's columns
    provenance: Dict[str, Any] = field(default_factory=dict)

    def jumps_of(self, j: int) -> np.ndarray:
        return self.jump_atoms[self.jump_offsets[j]:self.jump_offsets[j + 1]]

    def metadata(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "n": self.n,
            "c": self.rate,
            "bias_bound": self.bias_bound,
            "provenance": self.provenance,
        }


def _poisson_inversion(u: np.ndarray, c: float) -> np.ndarray:
    """Sequential search of the Poisson CDF for every uniform at once."""
    k = np.zeros(u.size, dtype=np.int64)
    prob = math.exp(-c)
    cdf = prob
    active = u > cdf
    step = 0
    while active.any():
        step += 1
        prob *= c / step
        cdf += prob
        k[active] = step
        active &= u > cdf
        if prob == 0.0:
            break  # cdf rounding stalled below u; k is already far in the tail
    return k


def _poisson_normal(rng: np.random.Generator, size: int, c: float) -> np.ndarray:
    """Rounded normal approximation, rejecting negative counts."""
    k = np.full(size, -1, dtype=np.int64)
    pending = np.arange(size)
    while pending.size:
        z = rng.standard_normal(pending.size)
        draw = np.rint(c + math.sqrt(c) * z).astype(np.int64)
        ok = draw >= 0
        k[pending[ok]] = draw[ok]
        pending = pending[~ok]
    return k


def _sample_block(state: SamplerState, block: int, size: int, settings: Settings):
    rng = state.generator(block)
    c = state.rate
    if c > settings.sampler.normal_threshold:
        counts = _poisson_normal(rng, size, c)
    else:
        counts = _poisson_inversion(rng.random(size), c)

    total = int(counts.sum())
    u = rng.random(total)
    picks = np.searchsorted(state.cumulative, u * state.cumulative[-1], side="right")
    picks = np.minimum(picks, state.cumulative.size - 1)
    atoms = state.order[picks]

    owners = np.repeat(np.arange(size), counts)
    locations = state.measure.locations
    values = np.empty((size, state.measure.d))
    for j in range(state.measure.d):
        # 0.0 - s keeps empty sums at +0.0
        values[:, j] = 0.0 - np.bincount(owners, weights=locations[atoms, j], minlength=size)
    return values, counts, atoms


def sample(
    measure: LevyMeasure,
    seed: int,
    n: int,
    settings: Settings = DEFAULT_SETTINGS,
    threads: int = 1,
    provenance: Optional[Dict[str, Any]] = None,
) -> SampleBatch:
    """n independent compound Poisson draws; identical for any thread count."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}", {"n": n})
    info = {"spec": measure.spec_name, "sigma": list(measure.sigma),
            "policy": measure.policy.to_dict(), "rng": RNG_NAME}
    info.update(provenance or {})

    if len(measure) == 0 or total_mass(measure) == 0.0:
        if np.any(measure.masses < 0):
            SamplerState.from_measure(measure, seed)  # raises
        logger.info("sampler: zero rate, every draw is the origin")
        return SampleBatch(
            values=np.zeros((n, measure.d)), seed=seed, n=n, rate=0.0,
            bias_bound=measure.omitted_tail, jump_offsets=np.zeros(n + 1, dtype=np.int64),
            jump_atoms=np.zeros(0, dtype=np.int64), provenance=info,
        )

    state = SamplerState.from_measure(measure, seed)
    size = settings.sampler.block_size
    blocks = [(b, min(size, n - b * size)) for b in range(math.ceil(n / size))]

    def run(item: Tuple[int, int]):
        return _sample_block(state, item[0], item[1], settings)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(item) for item in blocks]

    values = np.concatenate([r[0] for r in results])
    counts = np.concatenate([r[1] for r in results])
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    jump_atoms = np.concatenate([r[2] for r in results]).astype(np.int64)
    logger.info("sampled n=%d (c=%.6g, %d jumps, %d blocks)", n, state.rate,
                jump_atoms.size, len(blocks))
    return SampleBatch(values, seed, n, state.rate, state.bias_bound, offsets, jump_atoms, info)


def empirical_cf(batch: SampleBatch, t: Sequence[float]) -> complex:
    """(1/n) sum exp(i <t, X_j>)."""
    if batch.n < 1 or batch.values.shape[0] == 0:
        raise DomainError("empirical_cf needs a nonempty batch", {"n": batch.n})
    if len(t) != batch.values.shape[1]:
        raise DomainError(f"t has {len(t)} components, samples have {batch.values.shape[1]}",
                          {"t": list(t)})
    theta = batch.values @ np.asarray(t, dtype=np.float64)
    n = batch.values.shape[0]
    return complex(math.fsum(np.cos(theta)) / n, math.fsum(np.sin(theta)) / n)


def export_samples(batch: SampleBatch, csv_path: Path) -> Path:
    """CSV of x_1..x_d plus a JSON sidecar; returns the sidecar path."""
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    d = batch.values.shape[1]
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"x_{j + 1}" for j in range(d)])
        for row in batch.values.tolist():
            writer.writerow([repr(x) for x in row])
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(json.dumps(batch.metadata(), indent=2) + "\n")
    return sidecar


__all__ = [
    "RNG_NAME",
    "SampleBatch",
    "SamplerState",
    "empirical_cf",
    "export_samples",
    "sample",
]
