import pytest
from extvc.misc import lazyproperty, import_error_module


def test_lazyproperty():
    class Dummy:
        def __init__(self):
            self.val = 1

        @lazyproperty
        def a_prop(self):
            return self.val

    obj = Dummy()
    assert obj.val == 1
    assert obj.a_prop == 1
    obj.val = 23
    assert obj.a_prop == 1
    assert obj._a_prop == 1


def test_lazyproperty_none():
    class Dummy:
        calls = 0

        @lazyproperty
        def a_prop(self):
            self.calls += 1
            return None

    obj = Dummy()
    assert obj.a_prop is None
    assert obj.a_prop is None
    assert obj.calls == 2


def test_importerrormodule():
    png = import_error_module('png')
    assert png.Reader is png
    assert png.Reader.Writer is png
    with pytest.raises(ImportError, match=r'.*png.*extvc\[extras\].*'):
        png.Writer(width=1, height=1)
