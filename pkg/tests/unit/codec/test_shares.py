import pytest
import numpy as np
from fractions import Fraction
from extvc.base import DomainError, SchemeViolation, VerificationError
from extvc.lattice import SubsetFamily
from extvc.builder import droste_scheme, improved_scheme
from extvc.scheduling import Scheduler
from extvc.codec.base import BitImage, Layout
from extvc.codec.shares import Measurement, pixel_codes, encode, stack, measure, security_histogram
from extvc.scheme import SchemeTable
from tests.unit.base import family, check_certified, random_image, checkerboard, insecure_table


@pytest.fixture
def full2():
    table, _ = check_certified(droste_scheme(SubsetFamily.all(2)))
    return table


@pytest.fixture
def secrets():
    return {1: random_image(11, 8, 12), 2: random_image(12, 8, 12), 3: checkerboard(8, 12)}


def test_pixel_codes(full2, secrets):
    codes = pixel_codes(full2, secrets)
    assert codes.shape == (8, 12)
    expected = secrets[1].bits * 1 + secrets[2].bits * 2 + secrets[3].bits * 4
    assert np.array_equal(codes, expected)


def test_pixel_codes_missing(full2, secrets):
    with pytest.warns(UserWarning, match=r'no image for \{1,2\}.*'):
        codes = pixel_codes(full2, {1: secrets[1], 2: secrets[2]})
    assert codes.max() <= 3


@pytest.mark.parametrize('bad', [
    {},
    {4: BitImage.blank(2, 2)},
    {1: BitImage.blank(2, 2), 2: BitImage.blank(3, 2), 3: BitImage.blank(2, 2)},
])
def test_pixel_codes_invalid(full2, bad):
    with pytest.raises(DomainError):
        pixel_codes(full2, bad)


def test_encode_shape(full2, secrets):
    shares = encode(secrets, full2, seed=5)
    assert shares.n == 2
    assert shares.layout == Layout(2, 2)
    assert shares[1].shape == (16, 24)
    assert (shares.height, shares.width) == (8, 12)
    assert shares.m == 4
    assert shares.seed == 5
    assert shares.fingerprint == full2.fingerprint


@pytest.mark.parametrize('which,levels', [(1, (2, 3)), (2, (2, 3)), (3, (3, 4))])
def test_encode_stack_measure(full2, secrets, which, levels):
    shares = encode(secrets, full2, seed=1234)
    result = measure(stack(shares, which), secrets[which], shares.layout)
    assert isinstance(result, Measurement)
    assert (result.l, result.h) == levels
    assert result.alpha == Fraction(1, 4)
    assert result.m_effective == 4


def test_encode_deterministic(full2, secrets):
    one = encode(secrets, full2, seed=77)
    two = encode(secrets, full2, seed=77, scheduler=Scheduler({'n_jobs': 2, 'prefer': 'threads'}))
    other = encode(secrets, full2, seed=78)
    assert one == two
    assert all(a == b for a, b in zip(one.shares, two.shares))
    assert one.shares[0] != other.shares[0]


def test_encode_single_share_flat(secrets):
    table, _ = check_certified(droste_scheme(family(2, 3)))
    shares = encode({3: secrets[3]}, table, seed=9)
    assert shares.layout == Layout(1, 2)
    for i in (1, 2):
        blocks = shares[i].bits.reshape(8, 1, 12, 2).sum(axis=(1, 3))
        assert (blocks == 1).all()


def test_encode_filler(full2, secrets):
    shares = encode(secrets, full2, seed=3, layout=Layout(2, 3))
    assert shares[1].shape == (16, 36)
    result = measure(stack(shares, 3), secrets[3], shares.layout)
    assert (result.l, result.h) == (5, 6)
    assert result.alpha == Fraction(1, 6)
    assert result.m_effective == 6


def test_encode_improved():
    table, _ = check_certified(improved_scheme(family(2, 1, 2)))
    secrets = {1: random_image(1, 5, 7), 2: random_image(2, 5, 7)}
    shares = encode(secrets, table, seed=0)
    assert shares.layout == Layout(1, 1)
    assert shares[1] == secrets[1]
    assert shares[2] == secrets[2]
    result = measure(stack(shares, 1), secrets[1], shares.layout)
    assert (result.l, result.h, result.alpha) == (0, 1, 1)


def test_encode_refused(full2, secrets):
    with pytest.raises(VerificationError):
        encode(secrets, full2.with_verified(False), seed=1)
    with pytest.raises(DomainError):
        encode(secrets, full2, seed=-1)
    with pytest.raises(DomainError):
        encode(secrets, full2, seed=2 ** 64)
    with pytest.raises(DomainError):
        encode(secrets, full2, seed=1, layout=Layout(1, 3))


def test_stack(full2, secrets):
    shares = encode(secrets, full2, seed=4)
    both = stack(shares, 3)
    assert np.array_equal(both.bits, shares[1].bits | shares[2].bits)
    assert stack(shares, 1) == shares[1]
    for which in (0, 4, 7):
        with pytest.raises(DomainError):
            stack(shares, which)


def test_measure_single_colour():
    secret = BitImage.blank(3, 2)
    stacked = BitImage(np.ones((2, 6), dtype=bool))
    result = measure(stacked, secret, Layout(1, 2))
    assert (result.l, result.h, result.alpha) == (2, None, None)


def test_measure_violation():
    secret = BitImage.blank(2, 1)
    stacked = BitImage.from_rows(['#.##'])
    with pytest.raises(SchemeViolation) as e:
        measure(stacked, secret, Layout(1, 2))
    assert e.value.report['white'] == {'1': 1, '2': 1}


def test_measure_mismatch():
    with pytest.raises(DomainError):
        measure(BitImage.blank(4, 4), BitImage.blank(3, 2), Layout(2, 2))


def test_security_histogram(full2, secrets):
    shares = encode(secrets, full2, seed=21)
    for which in (1, 2):
        histogram = security_histogram(shares, which, secrets, full2)
        assert set(histogram) == set(range(8))
        profiles = {code: list(counter) for code, counter in histogram.items()}
        assert all(len(p) == 1 for p in profiles.values())
        bit = full2.family.within_mask(which)
        for code in range(8):
            assert profiles[code] == profiles[code & bit]
        assert sum(sum(c.values()) for c in histogram.values()) == 8 * 12
    with pytest.raises(DomainError):
        security_histogram(shares, 4, secrets, full2)


def test_encode_recertifies(secrets):
    forged = insecure_table().with_verified(True)
    loaded = SchemeTable.from_json(forged.to_json())
    assert loaded.verified
    with pytest.raises(VerificationError, match='fails certification'):
        encode({3: secrets[3]}, loaded, seed=1)
