import pytest

from lifs.ambient import hausdorff
from lifs.essential import attractor_from_global, convergence_report, essential_part, extinction_depths
from lifs.ifs_core import attractor, iterate
from lifs.scene import load_ifs
from lifs.acceptance import _line_cantor, _slab_cantor


@pytest.mark.parametrize("m", [0, 1, 3, 6])
def test_full_domain_keeps_everything(cantor, m):
    X = cantor.whole()
    ess = essential_part(cantor, X, 4, m)
    assert ess.value == iterate(cantor, X, 4)[-1]
    assert not ess.pruned


def test_value_decreases_in_lookahead(basins_ifs):
    X = basins_ifs.whole()
    values = [essential_part(basins_ifs, X, 3, m).value for m in range(0, 5)]
    assert all(b.issubset(a) for a, b in zip(values, values[1:]))
    assert values[0] == iterate(basins_ifs, X, 3)[-1]


def test_escaping_branch_is_pruned(basins_ifs):
    ess = essential_part(basins_ifs, basins_ifs.whole(), 1, 1)
    assert (4,) in ess.pruned
    assert basins_ifs.space.snap_point([4]) not in ess.value
    assert extinction_depths(basins_ifs, basins_ifs.whole(), 1, 3) == {(4,): 1}


def test_edge_system_words_all_extend(edge2):
    X = edge2.whole()
    ess = essential_part(edge2, X, 2, 3)
    assert ess.value == iterate(edge2, X, 2)[-1]


def test_rate_on_cantor_plus_point():
    ifs = load_ifs("cantor_basins.scene", cell=1e-4)
    rep = convergence_report(ifs, ifs.whole(), 8)
    assert rep.ok
    for p in rep.series:
        assert p.dist_ess <= (1 / 3) ** p.k * 4 + 2 * rep.slack


def test_rate_on_full_cantor(cantor):
    rep = convergence_report(cantor, cantor.whole(), 8)
    for p in rep.series:
        assert p.dist_ess <= 3.0**-p.k + 2 * rep.slack


def test_one_step_contraction(basins_ifs):
    rep = convergence_report(basins_ifs, basins_ifs.whole(), 8)
    s = rep.series
    for a, b in zip(s, s[1:]):
        assert b.dist_ess <= basins_ifs.lam * a.dist_ess + 3 * basins_ifs.snap_err


def test_starting_from_attractor(basins_ifs):
    A = attractor(basins_ifs, 20)
    rep = convergence_report(basins_ifs, A, 6, reference=A)
    assert all(p.dist_ess <= 2 * basins_ifs.snap_err for p in rep.series)


def test_from_global_attractor(basins_ifs, edge2, cantor):
    A = attractor(basins_ifs, 20)
    assert hausdorff(attractor_from_global(basins_ifs, 20), A) <= 2 * basins_ifs.snap_err
    assert attractor_from_global(cantor, 12) == attractor(cantor, 12)
    got = attractor_from_global(edge2, 20)
    expected = _slab_cantor(edge2.space) | edge2.set_of([[1, 1]])
    assert hausdorff(got, expected) <= 5e-3
