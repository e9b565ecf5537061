import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lifs.acceptance import sigma_words
from lifs.ambient import CompactSetApprox, hausdorff
from lifs.code_space import (
    address, code_map, common_suffix, cylinder, enumerate_codespace, restricted_shift_domain, sft_witness,
    shift_invariance_check, verify_holder, verify_semiconjugacy,
)
from lifs.errors import BudgetExceeded, InadmissibleWord

from conftest import interval_cells


def test_first_cylinder(cantor):
    sp = cantor.space
    expected = CompactSetApprox.from_ids(sp, interval_cells(sp, 0, 1 / 3))
    assert hausdorff(cylinder(cantor, (1,)), expected) <= sp.cell


def test_constant_cylinders(edge2):
    assert cylinder(edge2, (3,)) == edge2.set_of([[1, 1]])
    assert not cylinder(edge2, (3, 3))


def test_full_shift_counts(cantor):
    tree = enumerate_codespace(cantor, 7)
    assert tree.counts() == [2**k for k in range(1, 8)]


@pytest.mark.parametrize("k", range(1, 8))
def test_closed_form_words(edge3, k):
    tree = enumerate_codespace(edge3, k)
    assert set(tree.words(k)) == sigma_words(k, [(), (3,), (4,), (3, 4)])


def test_counts_formula(edge2, edge3):
    t2 = enumerate_codespace(edge2, 8).counts()
    t3 = enumerate_codespace(edge3, 8).counts()
    assert t2 == [2**k + 2 ** (k - 1) for k in range(1, 9)]
    assert t3[1:] == [2**k + 2 * 2 ** (k - 1) + 2 ** (k - 2) for k in range(2, 9)]
    assert t3[0] == 4


def test_budget(symbolic):
    with pytest.raises(BudgetExceeded):
        enumerate_codespace(symbolic, 20, budget=1000)


@pytest.mark.parametrize("k", [3, 6, 9])
def test_code_map_fixed_points(cantor, k):
    sp = cantor.space
    left = code_map(cantor, (1,) * k)
    right = code_map(cantor, (2,) * k)
    assert sp.coords([left.point])[0, 0] <= 3.0**-k + sp.cell
    assert sp.coords([right.point])[0, 0] >= 1 - 3.0**-k - sp.cell
    assert left.radius == pytest.approx(3.0**-k)


def test_code_map_endpoint_symbol(edge2):
    assert code_map(edge2, (1, 2, 1, 3)).point == edge2.space.snap_point([1, 1])
    with pytest.raises(InadmissibleWord):
        code_map(edge2, (3, 3))


@pytest.mark.parametrize("x, expected", [(3.0, {4}), (0.5, {1, 2, 3}), (3.5, set())])
def test_address(basins_ifs, x, expected):
    assert address(basins_ifs, basins_ifs.space.snap_point([x])) == expected


def test_restricted_shift_domain(cantor, edge2, edge3):
    tree = enumerate_codespace(cantor, 4)
    assert restricted_shift_domain(cantor, 1, tree) == set(tree.words(4))
    t2 = enumerate_codespace(edge2, 4)
    assert restricted_shift_domain(edge2, 3, t2) == {w for w in t2.words(4) if w[-1] != 3}
    t3 = enumerate_codespace(edge3, 4)
    assert (1, 2, 1, 3) in restricted_shift_domain(edge3, 4, t3)


@pytest.mark.parametrize("name", ["cantor", "basins_ifs", "edge2", "edge3"])
def test_semiconjugacy(request, name):
    ifs = request.getfixturevalue(name)
    rep = verify_semiconjugacy(ifs, enumerate_codespace(ifs, 7), samples=100)
    assert rep.ok and rep.checked > 0


def test_semiconjugacy_through_constant(edge2):
    q = edge2.space.snap_point([1, 1])
    for w in itertools.product((1, 2), repeat=5):
        assert code_map(edge2, w + (3,)).point == q


def test_holder_identical_and_suffix_pairs(cantor, edge3):
    tree = enumerate_codespace(cantor, 8)
    w = tree.words(8)[17]
    assert verify_holder(cantor, tree, pairs=[(w, w)]).ok
    assert verify_holder(cantor, tree, samples=100).ok
    t3 = enumerate_codespace(edge3, 6)
    pairs = [((1, 2, 1, 2, 3, 4), (1, 1, 2, 1, 2, 4))]
    rep = verify_holder(edge3, t3, pairs=pairs)
    assert rep.ok
    a, b = (code_map(edge3, w, t3).point for w in pairs[0])
    assert a == b == edge3.space.snap_point([0, 1])


@given(st.lists(st.sampled_from((1, 2)), min_size=8, max_size=8), st.integers(0, 8))
def test_shared_suffix_closeness(cantor, a, N):
    # words sharing their last N symbols have code points within 3^-N of each other
    b = [3 - s for s in a[: 8 - N]] + a[8 - N:]
    assert common_suffix(tuple(a), tuple(b)) == N
    sp = cantor.space
    pa, pb = code_map(cantor, a).point, code_map(cantor, b).point
    assert sp.distance(pa, pb) <= 3.0**-N + 2 * cantor.snap_err


def test_shift_invariance(cantor, edge3, symbolic):
    assert shift_invariance_check(enumerate_codespace(cantor, 6)).ok
    rep = shift_invariance_check(enumerate_codespace(edge3, 6))
    assert rep.ok
    assert rep.terminal and all(w[-1] == 4 for w in rep.terminal)
    assert shift_invariance_check(enumerate_codespace(symbolic, 10)).ok


def test_no_witnesses_for_unions_of_full_shifts(cantor, edge3):
    assert not sft_witness(cantor, 6, 1).witnesses
    for k in range(2, 7):
        for s in range(1, 5):
            assert not sft_witness(edge3, k, s).witnesses


def test_symbolic_witnesses_grow_with_depth(symbolic):
    two = symbolic.symbol_of("2")
    agreements = [sft_witness(symbolic, k, two).max_agreement for k in (5, 7, 9, 11)]
    assert agreements == sorted(agreements) and agreements[-1] > agreements[0]


def test_tree_dump(edge2):
    tree = enumerate_codespace(edge2, 2)
    d = tree.as_dict()
    assert d["depth"] == 2
    assert len(d["nodes"]) == sum(tree.counts())
    node = next(n for n in d["nodes"] if n["word"] == ["3"])
    assert node["cells"] == 1
