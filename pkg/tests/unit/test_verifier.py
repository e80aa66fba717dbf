import json
import pytest
import numpy as np
from dataclasses import replace
from itertools import permutations
from extvc.base import DomainError, VerificationError
from extvc.lattice import SubsetFamily
from extvc.linsys import PixelProfile
from extvc.contrast import Levels
from extvc.builder import droste_scheme, improved_scheme, basis_matrix
from extvc.verifier import (
    Witness, ConditionCheck, CERTIFICATE_FORMAT, or_weight, restrict_profile, verify_contrast, verify_security,
    certify, measure_levels, profile_from_matrix, import_collections
)
from tests.unit.base import family, check_certified, insecure_table


def mutated(table, code, support, step):
    counts = list(table.profiles[code].counts)
    counts[support] += step
    profiles = list(table.profiles)
    profiles[code] = PixelProfile(table.n, tuple(counts))
    return replace(table, profiles=tuple(profiles))


def column_class(matrix):
    matrix = np.asarray(matrix, dtype=bool)
    return [matrix[:, list(p)] for p in permutations(range(matrix.shape[1]))]


def test_or_weight():
    profile = droste_scheme(SubsetFamily.all(2)).profiles[0]
    assert or_weight(profile, 0b11) == 3
    assert or_weight(profile, 0b01) == 2
    with pytest.raises(DomainError):
        or_weight(profile, 0)


def test_restrict_profile():
    profile = PixelProfile(3, (1, 1, 0, 2, 1, 0, 0, 3))
    cut = restrict_profile(profile, 0b101)
    assert cut.n == 2
    assert cut.m == profile.m
    assert cut.counts == (1, 3, 1, 3)
    with pytest.raises(DomainError):
        restrict_profile(profile, 0)


def test_certify_droste():
    table, cert = check_certified(droste_scheme(SubsetFamily.all(2)))
    assert cert.observed_levels == {1: (3, 2), 2: (3, 2), 3: (4, 3)}
    assert cert.fingerprint == table.fingerprint
    assert cert.condition1.violations == 0
    assert cert.condition2.witnesses == []
    doc = cert.to_json()
    assert doc['format'] == CERTIFICATE_FORMAT
    assert doc['passed'] is True
    assert doc['observed_levels'] == [[[1], 3, 2], [[2], 3, 2], [[1, 2], 4, 3]]


@pytest.mark.parametrize('make', [
    lambda: droste_scheme(SubsetFamily.all(2)),
    lambda: droste_scheme(SubsetFamily.all_but_top(2)),
    lambda: improved_scheme(family(2, 1, 2)),
])
def test_certify_mutations(make):
    table = make()
    for code in range(len(table.profiles)):
        for support in range(1 << table.n):
            for step in (-1, 1):
                bad, cert = certify(mutated(table, code, support, step))
                assert not cert.passed
                assert not bad.verified


def test_certify_wrong_levels():
    table = droste_scheme(SubsetFamily.all(2))
    table = replace(table, levels=table.levels.shifted(1))
    _, cert = certify(table)
    assert not cert.passed
    assert cert.condition2.passed
    assert {w.kind for w in cert.condition1.witnesses} == {'level'}
    assert cert.condition1.violations == 3 * 8
    with pytest.raises(VerificationError):
        measure_levels(table)


def test_certify_no_contrast():
    table = droste_scheme(family(2, 3))
    table = replace(table, levels=Levels(2, table.levels.h, table.levels.h), profiles=(table.profiles[0],) * 2)
    _, cert = certify(table)
    kinds = {w.kind for w in cert.condition1.witnesses}
    assert 'contrast' in kinds


def test_certify_insecure():
    table, cert = certify(insecure_table())
    assert cert.condition1.passed
    assert not cert.condition2.passed
    assert not table.verified
    assert cert.condition2.violations == 2
    assert [w.subset for w in cert.condition2.witnesses] == [1, 2]
    witness = cert.condition2.witnesses[0]
    assert witness.kind == 'restriction'
    assert witness.code == 1
    assert witness.reference == 0
    assert witness.to_json()['subset'] == [1]


def test_witness_limit():
    table = droste_scheme(SubsetFamily.all(2))
    table = replace(table, levels=table.levels.shifted(1))
    check, _ = verify_contrast(table, max_witnesses=5)
    assert check.violations == 24
    assert len(check.witnesses) == 5


def test_conditioncheck():
    check = ConditionCheck(condition=2, passed=True)
    check.add(Witness('restriction', 3, 1, [], []), limit=1)
    check.add(Witness('restriction', 5, 1, [], []), limit=1)
    assert not check.passed
    assert check.violations == 2
    assert [w.code for w in check.witnesses] == [3]
    assert check.to_json()['violations'] == 2


def test_verify_security_only():
    table = droste_scheme(SubsetFamily.all(3))
    assert verify_security(table).passed
    assert measure_levels(table)[0b111] == (13, 12)


def test_certificate_save(tmp_path):
    _, cert = certify(insecure_table())
    path = str(tmp_path / 'cert.json')
    cert.save(path)
    with open(path) as fp:
        doc = json.load(fp)
    assert doc['passed'] is False
    assert doc['condition2']['violations'] == 2


def test_profile_from_matrix():
    assert profile_from_matrix([[1, 0, 1], [0, 1, 1]]).counts == (0, 1, 1, 1)
    profile = PixelProfile(3, (1, 0, 2, 0, 1, 0, 0, 1))
    assert profile_from_matrix(basis_matrix(profile)) == profile
    with pytest.raises(DomainError):
        profile_from_matrix([1, 0, 1])


def test_import_single_matrices():
    table = droste_scheme(SubsetFamily.all(2))
    collections = {code: [basis_matrix(p)] for code, p in enumerate(table.profiles)}
    imported = import_collections(table.family, collections)
    assert imported.profiles == table.profiles
    assert imported.m == 4
    _, cert = check_certified(imported)
    assert cert.observed_levels == {1: (3, 2), 2: (3, 2), 3: (4, 3)}
    with_levels = import_collections(table.family, collections, levels=table.levels)
    assert with_levels == table


def test_import_permutation_classes():
    fam = family(2, 3)
    collections = {
        0: column_class([[1, 0], [1, 0]]),
        1: column_class([[1, 0], [0, 1]]),
    }
    table, cert = check_certified(import_collections(fam, collections))
    assert table.m == 2
    assert cert.observed_levels == {3: (2, 1)}


@pytest.mark.parametrize('collections', [
    {0: [[[1, 0], [1, 0]]], 1: [[[1, 0], [0, 1]], [[1, 0], [0, 1]]]},
    {0: [[[1, 0], [1, 0]]], 1: [[[1, 0], [0, 1]], [[1, 1], [0, 0]]]},
    {0: [[[1, 0], [1, 0]]], 1: []},
    {0: [[[1, 0], [1, 0]]]},
    {0: [[[1, 0], [1, 0]]], 1: [[[1, 0, 0], [0, 1, 0]]]},
    {0: [[[1, 0], [1, 0]]], 1: [[[1, 0]]]},
    {0: [[[1, 0], [1, 0]]], 5: [[[1, 0], [0, 1]]]},
])
def test_import_rejected(collections):
    with pytest.raises(VerificationError):
        import_collections(family(2, 3), collections)
