import os
import pytest
from dataclasses import dataclass
from fractions import Fraction
from extvc.base import (
    ExtVCError, DomainError, InfeasibleError, PreconditionError, NotApplicableError, VerificationError,
    SchemeViolation, TractabilityError, _DCDict, fraction_to_json, fraction_from_json, make_document,
    check_document, canonical_json, fingerprint_bytes, fingerprint_file, atomic_write, dump_json, load_json
)


@pytest.mark.parametrize('cls,code', [
    (ExtVCError, 1), (DomainError, 1), (NotApplicableError, 2), (VerificationError, 3), (TractabilityError, 4)
])
def test_exit_codes(cls, code):
    assert issubclass(cls, ExtVCError)
    assert cls.exit_code == code


def test_exceptions():
    e = InfeasibleError('no way', violations=(1, 3), assignment=2)
    assert e.violations == [1, 3]
    assert e.assignment == 2
    assert e.exit_code == 2
    assert str(e) == 'no way'
    assert PreconditionError('bad', clause='parity').clause == 'parity'
    assert isinstance(DomainError('x'), ValueError)
    v = SchemeViolation('mixed', report={'white': [1, 2]})
    assert isinstance(v, VerificationError)
    assert v.report == {'white': [1, 2]}
    assert TractabilityError('big', required={'n': 9}).required == {'n': 9}


def test_dcdict():
    @dataclass
    class Dummy(_DCDict):
        a: int = 1
        b: str = 'x'

    d = Dummy()
    assert dict(d) == {'a': 1, 'b': 'x'}
    assert list(d.keys()) == ['a', 'b']
    assert d['b'] == 'x'


def test_fractions():
    assert fraction_to_json(Fraction(2, 4)) == '1/2'
    assert fraction_to_json(3) == '3/1'
    assert fraction_from_json('1/2') == Fraction(1, 2)
    assert fraction_from_json(3) == Fraction(3)
    with pytest.raises(DomainError):
        fraction_from_json('1/0')
    with pytest.raises(DomainError):
        fraction_from_json('half')


def test_documents():
    doc = make_document('extvc.thing', a=1)
    assert doc == {'format': 'extvc.thing', 'version': 1, 'a': 1}
    assert check_document(doc, 'extvc.thing') is doc
    with pytest.raises(DomainError):
        check_document(doc, 'extvc.other')
    with pytest.raises(DomainError):
        check_document([doc], 'extvc.thing')
    with pytest.raises(DomainError):
        check_document({**doc, 'version': 99}, 'extvc.thing')


def test_canonical_json():
    assert canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'
    assert fingerprint_bytes('abc') == fingerprint_bytes(b'abc')
    assert len(fingerprint_bytes('abc')) == 64


def test_files(tmp_path):
    path = str(tmp_path / 'sub' / 'doc.json')
    text = dump_json({'a': 1}, path)
    assert text.endswith('\n')
    assert load_json(path) == {'a': 1}
    assert fingerprint_file(path) == fingerprint_bytes(text)
    assert [f for f in os.listdir(tmp_path / 'sub')] == ['doc.json']

    atomic_write(path, b'{broken')
    with pytest.raises(DomainError, match=r'malformed JSON.*'):
        load_json(path)
