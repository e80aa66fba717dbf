from fractions import Fraction
from extvc.lattice import SubsetFamily
from extvc.builder import droste_scheme, improved_scheme
from extvc.report import TableReport, REPORT_FORMAT
from tests.unit.base import family, check_certified


def test_report_values():
    table, _ = check_certified(droste_scheme(SubsetFamily.all(2)))
    report = TableReport(table)
    assert report.construction == 'droste'
    assert report.droste_m == 4
    assert report.lower_bound == 4
    assert report.contrasts == {1: Fraction(1, 4), 2: Fraction(1, 4), 3: Fraction(1, 4)}
    assert report.tradeoff == 1
    rows = report.rows()
    assert [r['subset'] for r in rows] == [1, 2, 3]
    assert rows[2] == dict(subset=3, size=2, member=True, h=4, l=3, alpha=Fraction(1, 4))


def test_report_offfamily():
    table, _ = check_certified(improved_scheme(family(2, 1, 2)))
    report = TableReport(table)
    assert report.construction == 'improved'
    assert report.lower_bound == 1
    assert report.tradeoff == 2
    row = report.rows()[2]
    assert row['member'] is False
    assert row['alpha'] is None


def test_report_frame():
    table = droste_scheme(SubsetFamily.all(2))
    df = TableReport(table).to_frame()
    assert list(df.index) == ['[1]', '[2]', '[1, 2]']
    assert df.loc['[1, 2]', 'h'] == 4
    assert df['member'].all()


def test_report_json():
    table, _ = check_certified(droste_scheme(SubsetFamily.all(2)))
    doc = TableReport(table).to_json()
    assert doc['format'] == REPORT_FORMAT
    assert doc['verified'] is True
    assert doc['tradeoff_sum'] == '1/1'
    assert doc['alphas'][2] == [[1, 2], '1/4']
    assert doc['fingerprint'] == table.fingerprint


def test_report_text():
    table, _ = check_certified(droste_scheme(SubsetFamily.all(2)))
    text = str(TableReport(table))
    assert 'UNVERIFIED' not in text
    assert 'verified' in text
    assert 'family = {{1}, {2}, {1,2}}' in text
    assert 'm=4, droste would use 4' in text
    assert 'lower bound 4 (attained)' in text
    assert '= 1\n' in text
    assert '{1,2}*' in text
    assert table.fingerprint[:16] in text


def test_report_text_unverified():
    table = droste_scheme(SubsetFamily.all_but_top(2))
    text = TableReport(table).text
    assert text.lstrip().startswith('!!! UNVERIFIED')
    assert 'm=2, droste would use 2' in text
    assert 'lower bound 1 (1 above)' in text


def test_report_custom_template(tmp_path):
    (tmp_path / 'TableReport.txt.j2').write_text('custom m={{ table.m }} t={{ obj.tradeoff | fraction }}')
    table = droste_scheme(SubsetFamily.all(2))
    assert TableReport(table, template_paths=[str(tmp_path)]).text == 'custom m=4 t=1'
