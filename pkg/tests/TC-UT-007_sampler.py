"""
TC-UT-007: Compound Poisson sampler

Validates: zeta_dist.sampler (sample, empirical_cf, reproducibility, jump
records, export)
"""

import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from zeta_dist import catalog
from zeta_dist.errors import DomainError, NotADistributionError
from zeta_dist.levy import cumulant, enumerate_atoms
from zeta_dist.product import CoefficientScheme, ProductSpec, TruncationPolicy, normalized_cf
from zeta_dist.sampler import RNG_NAME, empirical_cf, export_samples, sample

SEED = 20240611
N = 100_000
ZETA2 = math.pi**2 / 6


@pytest.fixture(scope="module")
def riemann_measure():
    return enumerate_atoms(catalog.get("riemann").spec, [2.0], TruncationPolicy(prime_limit=10_000))


@pytest.fixture(scope="module")
def riemann_batch(riemann_measure):
    return sample(riemann_measure, SEED, N)


def test_probability_of_origin(riemann_batch):
    share = float(np.mean(riemann_batch.values[:, 0] == 0.0))
    assert share == pytest.approx(1 / ZETA2, abs=0.01)


def test_probability_of_single_jump_at_two(riemann_batch):
    share = float(np.mean(np.isclose(riemann_batch.values[:, 0], -math.log(2), atol=1e-12)))
    assert share == pytest.approx(0.25 / ZETA2, abs=0.01)


@pytest.mark.parametrize("t", [1.0, 2.0, 5.0])
def test_empirical_cf_matches_product(riemann_batch, t):
    spec = catalog.get("riemann").spec
    exact = normalized_cf(spec, [2.0], [t], TruncationPolicy(prime_limit=10_000))
    assert abs(empirical_cf(riemann_batch, [t]) - exact) <= 4 / math.sqrt(N)


def test_empirical_cf_conjugate_symmetry(riemann_batch):
    plus = empirical_cf(riemann_batch, [1.7])
    minus = empirical_cf(riemann_batch, [-1.7])
    assert minus.real == pytest.approx(plus.real, abs=1e-15)
    assert minus.imag == pytest.approx(-plus.imag, abs=1e-15)


def test_mean_matches_first_cumulant(riemann_measure, riemann_batch):
    k1 = cumulant(riemann_measure, [1])
    k2 = cumulant(riemann_measure, [2])
    assert abs(float(riemann_batch.values.mean()) - k1) <= 5 * math.sqrt(k2 / N)


def test_samples_are_reproducible(riemann_measure, riemann_batch):
    again = sample(riemann_measure, SEED, N)
    assert np.array_equal(again.values, riemann_batch.values)
    assert np.array_equal(again.jump_atoms, riemann_batch.jump_atoms)


def test_thread_count_does_not_change_samples(riemann_measure, riemann_batch):
    threaded = sample(riemann_measure, SEED, N, threads=8)
    assert np.array_equal(threaded.values, riemann_batch.values)
    assert np.array_equal(threaded.jump_offsets, riemann_batch.jump_offsets)


def test_seed_changes_samples(riemann_measure):
    a = sample(riemann_measure, 1, 1000)
    b = sample(riemann_measure, 2, 1000)
    assert not np.array_equal(a.values, b.values)


def test_jump_records_rebuild_values(riemann_measure, riemann_batch):
    locations = riemann_measure.locations
    for j in range(200):
        jumps = riemann_batch.jumps_of(j)
        assert -locations[jumps, 0].sum() == pytest.approx(riemann_batch.values[j, 0], abs=1e-12)


def test_metadata(riemann_batch):
    meta = riemann_batch.metadata()
    assert meta["seed"] == SEED and meta["n"] == N
    assert meta["c"] == pytest.approx(math.log(ZETA2), abs=1e-3)
    assert meta["provenance"]["rng"] == RNG_NAME
    assert meta["provenance"]["spec"] == "riemann"


def test_two_dimensional_samples():
    measure = enumerate_atoms(catalog.get("md_iii").spec, [2.0, 0.0], TruncationPolicy(2000))
    batch = sample(measure, 7, 5000)
    assert batch.values.shape == (5000, 2)
    # the second coordinate only moves with the (1, 1) direction
    assert np.all(batch.values[:, 0] <= batch.values[:, 1] + 1e-12)


def test_empty_measure_gives_origin():
    spec = ProductSpec(
        d=1,
        directions=((Fraction(1),),),
        tuple_size=1,
        coefficients=((CoefficientScheme.constant(0),),),
        name="empty",
    )
    measure = enumerate_atoms(spec, [2.0], TruncationPolicy(1000))
    batch = sample(measure, 3, 10)
    assert len(measure) == 0
    assert batch.rate == 0.0
    assert not batch.values.any()
    assert batch.jump_atoms.size == 0


def test_negative_measure_is_rejected():
    measure = enumerate_atoms(catalog.get("L1").spec, [2.0], TruncationPolicy(1000))
    with pytest.raises(NotADistributionError):
        sample(measure, 0, 10)


def test_bad_arguments(riemann_measure, riemann_batch):
    with pytest.raises(DomainError):
        sample(riemann_measure, 0, 0)
    with pytest.raises(DomainError):
        sample(riemann_measure, -1, 10)
    with pytest.raises(DomainError):
        empirical_cf(riemann_batch, [1.0, 2.0])


def test_export_samples(tmp_path, riemann_measure):
    batch = sample(riemann_measure, SEED, 50)
    sidecar = export_samples(batch, tmp_path / "samples.csv")
    with open(tmp_path / "samples.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x_1"]
    assert [float(r[0]) for r in rows[1:]] == batch.values[:, 0].tolist()
    assert json.loads(sidecar.read_text())["seed"] == SEED
