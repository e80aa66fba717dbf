import json
import pytest
import numpy as np
from fractions import Fraction
from extvc.lattice import SubsetFamily, nonempty_subsets, full_set
from extvc.contrast import alphas, tradeoff_sum, droste_expansion
from extvc.builder import droste_scheme, improved_scheme, realized_scheme
from extvc.scheduling import Scheduler
from extvc.search import min_expansion, conjecture_scan
from extvc.codec.images import write_image
from extvc.cli.readers import ImageCodecPbm
from extvc.cli.commands import (
    RunContext, CommandBuild, CommandEncode, CommandStack, CommandMeasure
)
from tests.unit.base import check_certified, random_image, checkerboard


def test_end_to_end_64(tmp_path, capsys):
    ctx = RunContext(codec=ImageCodecPbm(ext='pbm'), json=True)
    table = str(tmp_path / 'table.json')
    CommandBuild(n=2, family='all', certify=True, out=table).run(ctx)
    secrets = {
        '1': random_image(1, 64, 64),
        '2': random_image(2, 64, 64, density=0.3),
        '1,2': checkerboard(64, 64),
    }
    items = []
    for name, image in secrets.items():
        path = str(tmp_path / f'secret{name.replace(",", "")}.pbm')
        write_image(image, path)
        items.append(f'{name}={path}')

    for run in ('a', 'b'):
        CommandEncode(table=table, secrets=items, seed=2024, out=str(tmp_path / run)).run(ctx)
    for i in (1, 2):
        first = (tmp_path / 'a' / f'share_{i}.pbm').read_bytes()
        assert first == (tmp_path / 'b' / f'share_{i}.pbm').read_bytes()
    capsys.readouterr()

    for name, levels in (('1', [2, 3]), ('2', [2, 3]), ('1,2', [3, 4])):
        stacked = str(tmp_path / f'stack{name.replace(",", "")}.pbm')
        CommandStack(shares=str(tmp_path / 'a'), select=name, out=stacked).run(ctx)
        capsys.readouterr()
        CommandMeasure(
            stacked=stacked,
            secret=str(tmp_path / f'secret{name.replace(",", "")}.pbm'),
            shares=str(tmp_path / 'a'),
        ).run(ctx)
        doc = json.loads(capsys.readouterr().out)
        assert [doc['l'], doc['h']] == levels
        assert Fraction(doc['alpha']) == Fraction(1, 4)


def test_realized_targets():
    rng = np.random.default_rng(2)
    subsets = list(nonempty_subsets(2))
    for _ in range(50):
        chosen = [t for t in subsets if rng.random() < 0.6] or [subsets[0]]
        weights = {t: int(rng.integers(1, 6)) for t in chosen}
        total = sum(weights.values()) + int(rng.integers(0, 4))
        targets = {t: Fraction(w, (1 << (bin(t).count('1') - 1)) * total) for t, w in weights.items()}
        assert tradeoff_sum(targets) <= 1
        table, _ = check_certified(realized_scheme(targets, Fraction(1, 100), 2))
        realized = alphas(table.levels, table.m, table.family)
        assert tradeoff_sum(realized) <= 1
        for t, alpha in targets.items():
            assert alpha - Fraction(1, 100) < realized[t] <= alpha


@pytest.mark.slow
def test_all_but_top_n3_droste_optimal():
    fam = SubsetFamily.all_but_top(3)
    result = min_expansion(fam)
    assert result.m_star == droste_expansion(fam) == 9
    assert result.optimal_droste is True
    check_certified(result.witness)
    assert tradeoff_sum(alphas(result.witness.levels, result.witness.m, fam)) <= 1


@pytest.mark.slow
def test_improved_n3_below_droste():
    fam = SubsetFamily(3, frozenset(nonempty_subsets(3)) - {0b011})
    assert droste_expansion(fam) == 11
    table, _ = check_certified(improved_scheme(fam))
    assert table.m < 11
    assert tradeoff_sum(alphas(table.levels, table.m, fam)) <= 1
    result = min_expansion(fam)
    assert result.m_star is not None
    assert result.m_star <= table.m
    assert result.optimal_droste is False
    full = droste_scheme(SubsetFamily.all(3))
    assert full.m == 13
    assert full_set(3) in full.family


@pytest.mark.slow
def test_conjecture_scan_n3():
    df = conjecture_scan(3, scheduler=Scheduler({'n_jobs': 2}))
    assert len(df) > 5
    settled = df[df['agree'].notna()]
    assert len(settled) > 0
    assert (df['counterexample'] == df['agree'].eq(False)).all()
    optimal = settled[settled['m_star'].notna()]
    assert (optimal['droste_optimal'] == (optimal['m_star'] == optimal['droste_m'])).all()
