"""
TC-UT-004: Classification of normalized Euler products

Validates: zeta_dist.classify (direction conditions, sign lemma, classify,
certify_by_atoms, resolve)
"""

import itertools
from fractions import Fraction

import pytest

from zeta_dist import catalog
from zeta_dist.classify import (
    CertificateStatus,
    DirectionKind,
    TheoremUsed,
    Verdict,
    certify_by_atoms,
    classify,
    direction_condition,
    group_directions,
    rational_rank,
    require_strict,
    resolve,
    sign_lemma_holds,
    sign_profile,
    structural_negativity,
)
from zeta_dist.errors import DomainError, UnsupportedCoefficientsError
from zeta_dist.levy import cumulant, enumerate_atoms, total_mass
from zeta_dist.product import (
    CoefficientScheme,
    DirectionHint,
    DirectionMode,
    ProductSpec,
    TruncationPolicy,
)

SMALL = TruncationPolicy(prime_limit=2000)

COMPOUND_POISSON = ["riemann", "zeta_L_chi", "L1L2", "md_iii", "rank_shift", "tuple_rank_i"]
NOT_CHARACTERISTIC = ["L_chi4", "L1", "L2", "md_iv", "tuple_rank_ii"]


@pytest.mark.parametrize("name", COMPOUND_POISSON)
def test_compound_poisson_entries(name):
    entry = catalog.get(name)
    assert classify(entry.spec, entry.default_sigma).verdict is Verdict.COMPOUND_POISSON


@pytest.mark.parametrize("name", NOT_CHARACTERISTIC)
def test_not_characteristic_entries(name):
    entry = catalog.get(name)
    result = classify(entry.spec, entry.default_sigma)
    assert result.verdict is Verdict.NOT_CHARACTERISTIC
    assert result.offending_primes


@pytest.mark.parametrize("name", catalog.list_names())
def test_catalog_theorem_verdicts(name):
    entry = catalog.get(name)
    assert classify(entry.spec, entry.default_sigma).verdict is entry.theorem_verdict


def test_offending_pairs():
    assert classify(catalog.get("L1").spec, [2.0]).offending_primes == [(1, 2)]
    assert classify(catalog.get("L2").spec, [2.0]).offending_primes == [(1, 3)]
    chi = classify(catalog.get("L_chi4").spec, [2.0]).offending_primes
    assert chi[:4] == [(1, 3), (1, 7), (1, 11), (1, 19)]
    assert all(p % 4 == 3 for _, p in chi)


def test_md_iv_offends_in_second_direction():
    result = classify(catalog.get("md_iv").spec, [2.0, 0.5])
    assert result.theorem_used is TheoremUsed.RANK
    assert {l for l, _ in result.offending_primes} == {2}


def test_theorem_selection():
    assert classify(catalog.get("riemann").spec, [2.0]).theorem_used is TheoremUsed.TUPLE
    assert classify(catalog.get("md_iii").spec, [2.0, 0.0]).theorem_used is TheoremUsed.RANK
    assert classify(catalog.get("rank_shift").spec, [2.0, 0.0]).theorem_used is TheoremUsed.RANK
    assert (
        classify(catalog.get("tuple_rank_i").spec, [2.0, 0.0]).theorem_used is TheoremUsed.MAIN
    )


def test_collinear_entries_are_out_of_scope():
    for name in ("zeta2_L2s", "L_zeta2s"):
        result = classify(catalog.get(name).spec, [2.0])
        assert result.verdict is Verdict.OUT_OF_THEOREM_SCOPE
        assert result.direction.mode is DirectionKind.COLLINEAR_RATIONAL


def test_atom_certificates():
    assert (
        certify_by_atoms(catalog.get("zeta2_L2s").spec, [2.0], SMALL).status
        is CertificateStatus.CERTIFIED_UP_TO_TRUNCATION
    )
    negative = certify_by_atoms(catalog.get("L_zeta2s").spec, [2.0], SMALL)
    assert negative.status is CertificateStatus.NEGATIVE_ATOM_FOUND
    assert negative.atom.p == 3 and negative.atom.w == (Fraction(1),)
    assert negative.atom.mass == pytest.approx(-1 / 9)


def test_resolve():
    ok = resolve(catalog.get("zeta2_L2s").spec, [2.0], SMALL)
    assert ok.verdict is Verdict.COMPOUND_POISSON
    assert ok.theorem_used is TheoremUsed.ATOM_CERTIFICATE
    undecided = resolve(catalog.get("L_zeta2s").spec, [2.0], SMALL)
    assert undecided.verdict is Verdict.INCONCLUSIVE
    assert undecided.certification.status is CertificateStatus.NEGATIVE_ATOM_FOUND
    # in-scope specs pass through unchanged
    assert resolve(catalog.get("L1").spec, [2.0], SMALL).verdict is Verdict.NOT_CHARACTERISTIC


def test_classify_requires_convergence():
    with pytest.raises(DomainError):
        classify(catalog.get("riemann").spec, [1.0])


def test_to_dict_shape():
    out = classify(catalog.get("L1").spec, [2.0]).to_dict()
    assert out["verdict"] == "NotCharacteristic"
    assert out["offending"] == [[1, 2]]


# -- direction conditions -----------------------------------------------------


def test_rational_rank():
    assert rational_rank([[Fraction(1), Fraction(0)], [Fraction(1), Fraction(2)]]) == 2
    assert rational_rank([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]) == 1


def test_direction_conditions():
    assert direction_condition(catalog.get("md_iii").spec).mode is DirectionKind.LI
    assert direction_condition(catalog.get("L_zeta2s").spec).mode is (
        DirectionKind.COLLINEAR_RATIONAL
    )


def test_lr_declaration_is_accepted():
    spec = ProductSpec(
        d=1,
        directions=((Fraction(1),), (Fraction(1),)),
        tuple_size=1,
        coefficients=((CoefficientScheme.constant(1),), (CoefficientScheme.constant(1),)),
        direction_mode_hint=DirectionHint(
            DirectionMode.LR,
            psi=(Fraction(1), Fraction("1.4142135623730951")),
            note="1 and sqrt 2 are rationally independent",
        ),
    )
    result = classify(spec, [2.0])
    assert result.direction.mode is DirectionKind.LR
    assert result.verdict is Verdict.COMPOUND_POISSON
    assert any("LR accepted by declaration" in note for note in result.notes)


def test_equal_directions_are_grouped():
    spec = ProductSpec(
        d=2,
        directions=((Fraction(1), Fraction(0)), (Fraction(1), Fraction(0))),
        tuple_size=1,
        coefficients=((CoefficientScheme.constant(1),),
                      (CoefficientScheme.table(1, {2: -1}),)),
    )
    groups = group_directions(spec)
    assert len(groups) == 1 and groups[0].rows == (0, 1)
    result = classify(spec, [2.0, 0.0])
    assert result.theorem_used is TheoremUsed.TUPLE
    assert result.verdict is Verdict.COMPOUND_POISSON


# -- sign conditions ----------------------------------------------------------


@pytest.mark.parametrize("m", range(1, 9))
def test_sign_lemma_exhaustive(m):
    for alphas in itertools.product((-1, 0, 1), repeat=m):
        assert sign_lemma_holds([Fraction(a) for a in alphas])


def test_non_strict_triple_is_rejected():
    triple = [Fraction(1, 3), Fraction(1, 3), Fraction(-2, 3)]
    with pytest.raises(UnsupportedCoefficientsError):
        require_strict(triple)
    with pytest.raises(UnsupportedCoefficientsError):
        sign_lemma_holds(triple)


def test_non_strict_tuple_spec_is_rejected():
    spec = ProductSpec(
        d=1,
        directions=((Fraction(1),),),
        tuple_size=3,
        coefficients=((CoefficientScheme.constant(Fraction(1, 3)),
                       CoefficientScheme.constant(Fraction(1, 3)),
                       CoefficientScheme.constant(Fraction(-2, 3))),),
    )
    with pytest.raises(UnsupportedCoefficientsError):
        classify(spec, [2.0])


def test_sign_profile():
    profile = sign_profile(catalog.get("zeta_L_chi").spec, prime_limit=30)
    beta = profile.as_map()
    assert beta[(1, 2)] == 1.0
    assert beta[(1, 3)] == 0.0
    assert beta[(1, 5)] == 2.0
    assert profile.negative_pairs() == []


def test_structural_negativity_of_chi4():
    group = group_directions(catalog.get("L_chi4").spec)[0]
    info = structural_negativity(group)
    assert info["can_be_negative"]
    assert info["modulus"] == 4
    assert info["negative_classes"] == [3]


def test_single_non_strict_row_is_rejected():
    spec = ProductSpec(
        d=1,
        directions=((Fraction(1),),),
        tuple_size=1,
        coefficients=((CoefficientScheme.constant(Fraction(1, 2)),),),
    )
    with pytest.raises(UnsupportedCoefficientsError):
        classify(spec, [2.0])


def test_single_shifted_row_is_classified():
    result = classify(catalog.get("rank_shift").spec, [2.0, 0.0])
    assert result.verdict is Verdict.COMPOUND_POISSON
    assert result.theorem_used is TheoremUsed.RANK


def test_all_zero_coefficients():
    spec = ProductSpec(
        d=1,
        directions=((Fraction(1),),),
        tuple_size=2,
        coefficients=((CoefficientScheme.constant(0), CoefficientScheme.constant(0)),),
    )
    measure = enumerate_atoms(spec, [2.0], SMALL)
    assert len(measure) == 0
    assert total_mass(measure) == 0.0
    assert cumulant(measure, [1]) == 0.0
    assert cumulant(measure, [4]) == 0.0
    cert = certify_by_atoms(spec, [2.0], SMALL, measure=measure)
    assert cert.status is CertificateStatus.CERTIFIED_UP_TO_TRUNCATION
    assert classify(spec, [2.0]).verdict is Verdict.COMPOUND_POISSON


@pytest.mark.parametrize("name", catalog.list_names())
def test_compound_poisson_verdicts_have_nonnegative_atoms(name):
    entry = catalog.get(name)
    result = classify(entry.spec, entry.default_sigma)
    if result.verdict is not Verdict.COMPOUND_POISSON:
        pytest.skip(f"{name} is {result.verdict.value}")
    cert = certify_by_atoms(entry.spec, entry.default_sigma, SMALL)
    assert cert.status is CertificateStatus.CERTIFIED_UP_TO_TRUNCATION
