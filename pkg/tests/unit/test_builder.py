import pytest
import warnings
import itertools
import numpy as np
from fractions import Fraction
from extvc.base import DomainError, InfeasibleError, NotApplicableError, PreconditionError
from extvc.lattice import SubsetFamily, nonempty_subsets
from extvc.linsys import PixelProfile, RVector, solve_x, verify_solution
from extvc.contrast import (
    DeltaSpec, Levels, alphas, tight_levels, droste_expansion, theorem7_candidates, theorem7_levels, relief_subsets
)
from extvc.scheme import ColorAssignment
from extvc.verifier import or_weight
from extvc.builder import (
    kk_threshold_profiles, droste_scheme, canonical_r, build_scheme, improved_scheme, table_from_r, pad_black,
    realized_scheme, basis_matrix, relabel, lift_table
)
from tests.unit.base import family, check_certified


def tight(fam):
    return tight_levels(DeltaSpec.for_family(fam))


def small_families():
    for n in (1, 2):
        masks = nonempty_subsets(n)
        for bits in range(1, 1 << len(masks)):
            yield SubsetFamily(n, frozenset(m for j, m in enumerate(masks) if bits >> j & 1))


def test_kk_threshold():
    white, black = kk_threshold_profiles(2)
    assert white.counts == (1, 0, 0, 1)
    assert black.counts == (0, 1, 1, 0)
    white, black = kk_threshold_profiles(3)
    assert white.m == black.m == 4
    assert or_weight(white, 0b111) == 3
    assert or_weight(black, 0b111) == 4
    for rows in (0b001, 0b011, 0b110):
        assert or_weight(white, rows) == or_weight(black, rows)
    with pytest.raises(DomainError):
        kk_threshold_profiles(0)


def test_droste_n2():
    table = droste_scheme(SubsetFamily.all(2))
    assert table.m == 4
    assert table.profiles[0].counts == (1, 1, 1, 1)
    assert table.levels == tight(SubsetFamily.all(2))
    assert table.provenance['construction'] == 'droste'
    check_certified(table)


@pytest.mark.parametrize('fam,m', [
    (SubsetFamily.all(3), 13),
    (SubsetFamily.all_but_top(3), 9),
    (family(3, 0b011, 0b110), 4),
    (family(3, 0b111), 4),
])
def test_droste_n3(fam, m):
    table = droste_scheme(fam)
    assert table.m == m == droste_expansion(fam)
    check_certified(table)


def test_droste_empty():
    with pytest.raises(DomainError):
        droste_scheme(SubsetFamily(2))


def test_canonical_r():
    fam = SubsetFamily.all(2)
    levels = tight(fam)
    assert canonical_r(ColorAssignment(fam, 0), levels).values == (0, 2, 2, 3)
    assert canonical_r(ColorAssignment(fam, 7), levels).values == (0, 3, 3, 4)
    assert canonical_r(ColorAssignment(fam, 0b001), levels).values == (0, 3, 2, 3)


def test_canonical_r_offfamily():
    fam = family(2, 1, 2)
    levels = Levels(2, (0, 1, 1, 0), (0, 0, 0, 1))
    assert canonical_r(ColorAssignment(fam, 0), levels)[3] == 0
    assert canonical_r(ColorAssignment(fam, 1), levels)[3] == 1
    assert canonical_r(ColorAssignment(fam, 3), levels)[3] == 1
    with pytest.raises(DomainError):
        canonical_r(ColorAssignment(fam, 0), tight(SubsetFamily.all(3)))


def test_build_scheme_n2():
    fam = SubsetFamily.all(2)
    table = build_scheme(fam, tight(fam))
    assert table.m == 4
    assert table.profiles[0].counts == (1, 1, 1, 1)
    assert table.profiles[7].counts == (0, 1, 1, 2)
    assert table.provenance == {'construction': 'tight', 'padding': 'white'}
    check_certified(table)


@pytest.mark.parametrize('fam', list(small_families()))
def test_build_scheme_small(fam):
    table, cert = check_certified(build_scheme(fam, tight(fam)))
    assert table.m <= droste_expansion(fam)
    for t in fam:
        assert cert.observed_levels[t] == tight(fam)[t]
    for code, profile in enumerate(table.profiles):
        r = canonical_r(ColorAssignment(fam, code), table.levels)
        assert verify_solution(r, solve_x(r))


@pytest.mark.parametrize('fam', [SubsetFamily.all(3), SubsetFamily.all_but_top(3)])
def test_build_scheme_n3(fam):
    table, _ = check_certified(build_scheme(fam, tight(fam)))
    assert table.m <= droste_expansion(fam)


def test_build_scheme_tight_members():
    fam = family(2, 1, 2)
    table = build_scheme(fam, tight(fam))
    assert table.m == 2
    check_certified(table)


def test_build_scheme_projected():
    fam = family(3, 1, 2, 3)
    table, _ = check_certified(build_scheme(fam, tight(fam)))
    assert table.m == 4
    assert table.provenance['projected'] == {'support': [1, 2]}
    assert all(p[0b100] == 0 for p in table.profiles)


def test_build_scheme_infeasible():
    fam = SubsetFamily.all(2)
    with pytest.raises(InfeasibleError) as e:
        build_scheme(fam, Levels(2, (0, 3, 3, 4), (0, 2, 2, 2)))
    assert e.value.violations == [1, 2]
    with pytest.raises(DomainError):
        build_scheme(SubsetFamily(2), tight(fam))
    with pytest.raises(DomainError):
        build_scheme(fam, tight(SubsetFamily.all(3)))


def test_improved_two_images():
    table, cert = check_certified(improved_scheme(family(2, 1, 2)))
    assert table.m == 1
    assert table.provenance['construction'] == 'improved'
    assert table.provenance['t'] == [1, 2]
    assert cert.observed_levels == {1: (1, 0), 2: (1, 0)}
    assert table.profiles[0b01].counts == (0, 1, 0, 0)
    assert table.profiles[0b10].counts == (0, 0, 1, 0)
    assert table.profiles[0b11].counts == (0, 0, 0, 1)


def test_improved_n3():
    fam = SubsetFamily(3, frozenset(SubsetFamily.all(3).members - {0b011}))
    assert droste_expansion(fam) == 11
    table, _ = check_certified(improved_scheme(fam))
    assert table.m < 11
    assert table.provenance['t'] == [1, 2]


def test_improved_not_applicable():
    with pytest.raises(NotApplicableError):
        improved_scheme(SubsetFamily.all_but_top(3))
    with pytest.raises(NotApplicableError):
        improved_scheme(SubsetFamily.all(2))


def test_table_from_r():
    fam = family(2, 3)
    rvectors = [canonical_r(ColorAssignment(fam, c), tight(fam)) for c in fam.assignments()]
    table = table_from_r(fam, tight(fam), rvectors, m=5)
    assert table.m == 5
    assert all(p.m == 5 for p in table.profiles)
    with pytest.raises(InfeasibleError):
        table_from_r(fam, tight(fam), rvectors, m=1)


def test_table_from_r_negative():
    fam = family(2, 3)
    with pytest.raises(InfeasibleError) as e:
        table_from_r(fam, tight(fam), [RVector.of(2, [1, 1, 3]), RVector.of(2, [1, 1, 2])])
    assert e.value.assignment == 0
    assert e.value.violations == [3]


def test_pad_black():
    table = droste_scheme(SubsetFamily.all(2))
    padded, _ = check_certified(pad_black(table, 2))
    assert padded.m == 6
    assert padded.levels == table.levels.shifted(2)
    assert padded.provenance['black_padding'] == 2
    assert alphas(padded.levels, padded.m)[1] == Fraction(1, 6)
    assert pad_black(table, 0) is table
    with pytest.raises(DomainError):
        pad_black(table, -1)


def test_realized_scheme():
    table, _ = check_certified(realized_scheme({1: Fraction(1, 4), 2: Fraction(1, 4), 3: Fraction(1, 4)}, 0, 2))
    assert table.m == 4
    assert alphas(table.levels, table.m, table.family) == {t: Fraction(1, 4) for t in (1, 2, 3)}


def test_realized_scheme_diluted():
    table, _ = check_certified(realized_scheme({1: Fraction(1, 3), 2: Fraction(1, 3)}, 0, 2))
    assert table.m == 3
    assert table.provenance['construction'] == 'realized'
    assert alphas(table.levels, table.m, table.family) == {1: Fraction(1, 3), 2: Fraction(1, 3)}


def test_realized_scheme_dropped():
    with pytest.warns(UserWarning, match=r'.*rounded to zero.*'):
        table = realized_scheme({1: Fraction(2, 7), 2: Fraction(1, 100)}, Fraction(1, 10), 2)
    assert table.family == family(2, 1)
    assert table.m == 4
    check_certified(table)


def test_realized_scheme_infeasible():
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        with pytest.raises(InfeasibleError):
            realized_scheme({3: Fraction(3, 4)}, 0)


def test_basis_matrix():
    profile = PixelProfile(2, (1, 1, 0, 2))
    matrix = basis_matrix(profile)
    assert matrix.shape == (2, 4)
    assert matrix.dtype == bool
    assert matrix.tolist() == [[False, True, True, True], [False, False, True, True]]
    assert int(np.any(matrix, axis=0).sum()) == or_weight(profile, 0b11)
    with pytest.raises(DomainError):
        basis_matrix(PixelProfile(2, (1, -1, 0, 2)))


def test_relabel():
    table = droste_scheme(family(2, 1))
    swapped, _ = check_certified(relabel(table, [2, 1]))
    assert swapped.family == family(2, 2)
    assert swapped.levels[2] == table.levels[1]
    assert swapped.provenance['relabelled'] == [2, 1]
    table = improved_scheme(family(2, 1, 2))
    check_certified(relabel(table, [2, 1]))


def test_lift_table():
    inner = droste_scheme(SubsetFamily.all(2))
    fam = family(3, 0b001, 0b100, 0b101)
    lifted, _ = check_certified(lift_table(inner, fam))
    assert lifted.m == inner.m
    assert lifted.levels[0b010] == (0, 0)
    assert lifted.levels[0b101] == inner.levels[0b11]


FOUR_A = family(4, 0b0001, 0b0010, 0b0011, 0b0100, 0b0101, 0b0110, 0b1000, 0b1010, 0b1101, 0b1110)
FOUR_B = family(4, 0b0001, 0b0010, 0b0011, 0b0100, 0b0111, 0b1000, 0b1001, 0b1010, 0b1011)
PAIRS_4 = family(4, 0b0001, 0b0010, 0b0100, 0b1000, 0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100)


@pytest.mark.parametrize('fam,relief', [(FOUR_A, [1, 4]), (FOUR_B, [1, 3])])
def test_improved_full_stack_relieved(fam, relief):
    table, cert = check_certified(improved_scheme(fam, 0b1111))
    assert table.m == droste_expansion(fam) - 1
    assert table.provenance['t'] == [1, 2, 3, 4]
    assert table.provenance['relief'] == relief
    assert table.levels == theorem7_levels(fam, 0b1111, relief_subsets(fam, 0b1111)[0])
    assert all(cert.observed_levels[t] == table.levels[t] for t in fam.members)


def test_improved_smallest_candidate():
    table, _ = check_certified(improved_scheme(FOUR_A))
    assert table.provenance['t'] == [1, 4]
    assert table.provenance['relief'] == [1, 4]
    assert table.m == droste_expansion(FOUR_A) - 1


def test_improved_without_relief():
    assert theorem7_candidates(PAIRS_4) == [0b1111]
    with pytest.raises(InfeasibleError) as e:
        improved_scheme(PAIRS_4)
    assert e.value.violations == [0b1111]
    with pytest.raises(PreconditionError):
        improved_scheme(FOUR_A, 0b0011)


def test_improved_every_candidate_n4():
    rng = np.random.default_rng(1)
    masks = nonempty_subsets(4)
    families = [FOUR_A, FOUR_B]
    for _ in range(30):
        picked = rng.choice(len(masks), size=int(rng.integers(3, 9)), replace=False)
        families.append(SubsetFamily(4, frozenset(masks[int(j)] for j in picked)))
    for fam in families:
        for t in theorem7_candidates(fam):
            if relief_subsets(fam, t):
                table, _ = check_certified(improved_scheme(fam, t))
                assert table.m == droste_expansion(fam) - 1
            else:
                with pytest.raises(InfeasibleError):
                    improved_scheme(fam, t)


@pytest.mark.parametrize('build', [
    lambda: droste_scheme(family(3, 0b001, 0b011, 0b110)),
    lambda: improved_scheme(SubsetFamily(3, frozenset(SubsetFamily.all(3).members - {0b011}))),
    lambda: realized_scheme({1: Fraction(1, 5), 6: Fraction(1, 10)}, 0, 3),
])
def test_relabel_keeps_certification(build):
    table, _ = check_certified(build())
    for perm in itertools.permutations([1, 2, 3]):
        relabelled, _ = check_certified(relabel(table, list(perm)))
        assert relabelled.m == table.m
