"""
TC-UT-005: Levy measures

Validates: zeta_dist.levy (enumerate_atoms, merging, closed forms, total mass,
two-path characteristic function, cumulants, moments, triplet, zeta_pmf,
export)
"""

import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import log_derivative_oracle

from zeta_dist import catalog
from zeta_dist.errors import DomainError, NotADistributionError
from zeta_dist.levy import (
    absolute_moment,
    cf_from_atoms,
    cumulant,
    enumerate_atoms,
    export_atoms,
    lk_triplet,
    mass_upper_bound,
    total_mass,
    zeta_pmf,
)
from zeta_dist.product import (
    CoefficientScheme,
    EvalPoint,
    ProductSpec,
    TruncationPolicy,
    eval_log,
    log_normalized_cf,
    normalized_cf,
)
from zeta_dist.arith import RealCharacter

SMALL = TruncationPolicy(prime_limit=2000)
ZETA2 = math.pi**2 / 6


@pytest.mark.parametrize("name", ["dedekind_qi", "zeta2_L2s"])
def test_closed_form_atoms_exact(name, no_drop_settings):
    entry = catalog.get(name)
    measure = enumerate_atoms(
        entry.spec, [2.0], TruncationPolicy(prime_limit=100, power_limit=20), no_drop_settings
    )
    for p in range(2, 101):
        if any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            continue
        for r in range(1, 11):
            expected = entry.closed_form_atoms(p, r, 2.0)
            atom = measure.atom_at(p, (Fraction(r),))
            if expected == 0.0:
                assert atom is None, (p, r)
            else:
                assert atom is not None and atom.mass == expected, (p, r)


def test_dedekind_cancellation():
    entry = catalog.get("dedekind_qi")
    assert entry.closed_form_atoms(5, 1, 2.0) == pytest.approx(2 * 5.0**-2)
    assert entry.closed_form_atoms(3, 1, 2.0) == 0.0
    assert entry.closed_form_atoms(3, 2, 2.0) == pytest.approx(3.0**-4)
    assert entry.closed_form_atoms(2, 3, 2.0) == pytest.approx(2.0**-6 / 3)


def test_merged_atom_provenance():
    measure = enumerate_atoms(catalog.get("L_zeta2s").spec, [2.0], SMALL)
    atom = measure.atom_at(3, (Fraction(2),))
    assert atom.coefficient == Fraction(3, 2)
    assert atom.sources == ((1, 2), (2, 1))
    assert (atom.l, atom.r) == (1, 2)
    assert atom.mass == pytest.approx(1.5 * 3.0**-4)
    assert measure.atom_at(3, (Fraction(1),)).mass == pytest.approx(-1 / 9)


def test_atom_locations():
    measure = enumerate_atoms(catalog.get("md_iv").spec, [2.0, 0.5], SMALL)
    atom = measure.atom_at(5, (Fraction(1), Fraction(2)))
    assert atom.location == pytest.approx((math.log(5), 2 * math.log(5)))
    assert atom.mass == pytest.approx(5.0**-3)


def _random_spec(rng: np.random.Generator, index: int) -> ProductSpec:
    d = int(rng.integers(1, 3))
    phi = int(rng.integers(1, 3))
    eta = int(rng.integers(1, 3))
    pool = [
        CoefficientScheme.constant(1),
        CoefficientScheme.constant(-1),
        CoefficientScheme.constant(Fraction(1, 2)),
        CoefficientScheme.from_character(RealCharacter.chi4()),
        CoefficientScheme.from_character(RealCharacter.quadratic(5)),
        CoefficientScheme.table(1, {2: -1, 7: 0}),
        CoefficientScheme.prime_power(Fraction(1, 3)),
    ]
    directions = []
    while len(directions) < phi:
        a = tuple(Fraction(int(x)) for x in rng.integers(0, 3, size=d))
        if any(a):
            directions.append(a)
    rows = tuple(
        tuple(pool[int(i)] for i in rng.integers(0, len(pool), size=eta)) for _ in range(phi)
    )
    return ProductSpec(d, tuple(directions), eta, rows, name=f"random-{index}")


def test_mass_log_identity_random_specs():
    rng = np.random.default_rng(11)
    for i in range(20):
        spec = _random_spec(rng, i)
        sigma = [2.0] * spec.d
        measure = enumerate_atoms(spec, sigma, SMALL)
        log_value, _ = eval_log(spec, EvalPoint.real(sigma), SMALL)
        assert abs(total_mass(measure) - log_value.real) <= 2 * measure.omitted_tail


@pytest.mark.parametrize("name", catalog.list_names())
def test_mass_log_identity_catalog(name):
    entry = catalog.get(name)
    measure = enumerate_atoms(entry.spec, entry.default_sigma, SMALL)
    log_value, _ = eval_log(entry.spec, EvalPoint.real(entry.default_sigma), SMALL)
    assert abs(total_mass(measure) - log_value.real) <= 2 * measure.omitted_tail


@pytest.mark.parametrize("name", ["riemann", "dedekind_qi", "md_iii"])
def test_two_path_characteristic_function(name):
    entry = catalog.get(name)
    sigma = entry.default_sigma
    measure = enumerate_atoms(entry.spec, sigma, SMALL)
    rng = np.random.default_rng(3)
    for t in rng.uniform(-20, 20, size=(25, entry.spec.d)):
        direct = normalized_cf(entry.spec, sigma, t, SMALL)
        assert abs(cf_from_atoms(measure, t) - direct) <= 4 * measure.omitted_tail


def test_threads_do_not_change_atoms():
    spec = catalog.get("tuple_rank_i").spec
    one = enumerate_atoms(spec, [2.0, 0.0], SMALL, threads=1)
    four = enumerate_atoms(spec, [2.0, 0.0], SMALL, threads=4)
    assert np.array_equal(one.masses, four.masses)
    assert np.array_equal(one.primes, four.primes)
    assert one.omitted_tail == four.omitted_tail


def test_enumerate_requires_convergence():
    with pytest.raises(DomainError):
        enumerate_atoms(catalog.get("riemann").spec, [0.9])


# -- cumulants and moments ----------------------------------------------------


def test_first_cumulant_riemann():
    measure = enumerate_atoms(catalog.get("riemann").spec, [2.0])
    assert cumulant(measure, [1]) == pytest.approx(log_derivative_oracle(2.0), abs=2e-5)


@pytest.mark.slow
def test_first_cumulant_riemann_fine():
    policy = TruncationPolicy(prime_limit=4_000_000)
    measure = enumerate_atoms(catalog.get("riemann").spec, [2.0], policy)
    assert abs(cumulant(measure, [1]) - log_derivative_oracle(2.0)) <= 1e-6


def test_first_cumulant_matches_finite_difference():
    spec = catalog.get("riemann").spec
    measure = enumerate_atoms(spec, [2.0], SMALL)
    h = 1e-4
    slope = (log_normalized_cf(spec, [2.0], [h], SMALL)
             - log_normalized_cf(spec, [2.0], [-h], SMALL)) / (2 * h)
    assert slope.imag == pytest.approx(cumulant(measure, [1]), abs=1e-6)


def test_second_cumulant_is_positive_variance():
    measure = enumerate_atoms(catalog.get("md_iii").spec, [2.0, 0.0], SMALL)
    assert cumulant(measure, [2, 0]) > 0
    assert cumulant(measure, [0, 2]) > 0
    assert cumulant(measure, [1, 1]) > 0


@pytest.mark.parametrize("order", [[0], [5], [-1], [1, 0]])
def test_cumulant_order_checks(order):
    measure = enumerate_atoms(catalog.get("riemann").spec, [2.0], SMALL)
    with pytest.raises(DomainError):
        cumulant(measure, order)


def test_absolute_moments_stable_under_doubling():
    spec = catalog.get("riemann").spec
    coarse = enumerate_atoms(spec, [2.0], TruncationPolicy(prime_limit=100_000))
    fine = enumerate_atoms(spec, [2.0], TruncationPolicy(prime_limit=200_000))
    for k in range(1, 9):
        a, b = absolute_moment(coarse, k), absolute_moment(fine, k)
        assert math.isfinite(a) and math.isfinite(b)
        assert a <= b
        assert (b - a) / b <= 0.05


def test_mass_upper_bound():
    measure = enumerate_atoms(catalog.get("L_chi4").spec, [2.0], SMALL)
    assert np.abs(measure.masses).sum() <= mass_upper_bound(2.0, 1)
    with pytest.raises(DomainError):
        mass_upper_bound(1.0, 1)


# -- triplet, point masses, export --------------------------------------------


def test_triplet():
    riemann = enumerate_atoms(catalog.get("riemann").spec, [2.0], SMALL)
    triplet = lk_triplet(riemann)
    assert not triplet.gaussian.any() and not triplet.drift.any()
    with pytest.raises(NotADistributionError):
        lk_triplet(enumerate_atoms(catalog.get("L1").spec, [2.0], SMALL))


def test_zeta_pmf_riemann():
    pmf = zeta_pmf(catalog.get("riemann").spec, [2.0], 10)
    assert pmf.probabilities[1] == pytest.approx(1 / ZETA2, rel=1e-5)
    assert pmf.probabilities[2] == pytest.approx(0.25 / ZETA2, rel=1e-5)
    assert pmf.negative == ()
    assert pmf.location(2) == (-math.log(2),)


def test_zeta_pmf_reports_negative_coefficients():
    pmf = zeta_pmf(catalog.get("L1").spec, [2.0], 10)
    assert 2 in pmf.negative and 4 not in pmf.negative


def test_zeta_pmf_needs_one_direction():
    with pytest.raises(DomainError):
        zeta_pmf(catalog.get("L_zeta2s").spec, [2.0], 10)


def test_export_atoms(tmp_path):
    measure = enumerate_atoms(catalog.get("md_iii").spec, [2.0, 0.0], SMALL)
    sidecar = export_atoms(measure, tmp_path / "atoms.csv")
    with open(tmp_path / "atoms.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["p", "r", "l", "mass", "x_1", "x_2"]
    assert len(rows) == len(measure) + 1
    assert float(rows[1][3]) == measure.atoms[0].mass
    meta = json.loads(sidecar.read_text())
    assert meta["total_mass"] == total_mass(measure)
    assert meta["omitted_tail"] == measure.omitted_tail
