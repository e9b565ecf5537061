import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lifs.ambient import CompactSetApprox, GridSpace, SymbolSpace, gap, hausdorff, one_sided, read_csv, write_csv
from lifs.errors import EmptySetDistance, InvalidSymbol, OutOfBounds


@pytest.mark.parametrize("x, cell, center", [(0.0, 0, 0.05), (0.05, 0, 0.05), (1.0, 9, 0.95), (0.55, 5, 0.55)])
def test_snap_unit_interval(x, cell, center):
    space = GridSpace(((0, 1),), 0.1)
    p = space.snap_point([x])
    assert p == cell
    assert space.coords([p])[0, 0] == pytest.approx(center)


def test_snap_midpoint_of_long_interval():
    space = GridSpace(((0, 4),), 0.01)
    p = space.snap_point([2.0])
    assert abs(space.coords([p])[0, 0] - 2.0) <= 0.005 + 1e-12


def test_snap_outside_bounds():
    space = GridSpace(((0, 1),), 0.1)
    with pytest.raises(OutOfBounds):
        space.snap_point([1.2])


def test_grid_distance_by_hand():
    space = GridSpace(((0, 2), (0, 2)), 0.1)
    p = space.snap_point([0.55, 1.55])
    q = space.snap_point([1.25, 0.25])
    assert space.distance(p, q) == pytest.approx(math.sqrt(0.7**2 + 1.3**2))
    assert space.distance(p, p) == 0


def test_grid_diameter_is_box_diagonal():
    assert GridSpace(((0, 3), (0, 4)), 0.5).diameter == pytest.approx(5.0)


def test_symbol_distance_common_prefix():
    space = SymbolSpace(3, 8)
    a, b = space.snap("01100000"), space.snap("01000000")
    assert space.distance(a, b) == pytest.approx(math.exp(-2))
    assert space.distance(a, a) == 0


def test_symbol_space_rejects_bad_symbol():
    with pytest.raises(InvalidSymbol):
        SymbolSpace(2, 6).snap("012000")


@given(st.lists(st.integers(0, 2), min_size=6, max_size=6))
def test_symbol_digits_round_trip(digits):
    space = SymbolSpace(3, 6)
    p = space.from_digits([digits])[0]
    assert list(space.digits([p])[0]) == digits
    assert space.format_point(int(p)) == "".join(map(str, digits))


def test_hausdorff_interval_vs_two_thirds():
    space = GridSpace(((0, 1),), 1e-3)
    full = CompactSetApprox.whole(space)
    ids = np.arange(space.size)
    x = space.coords(ids)[:, 0]
    parts = CompactSetApprox.from_ids(space, ids[(x <= 1 / 3) | (x >= 2 / 3)])
    assert hausdorff(full, parts) == pytest.approx(1 / 6, abs=space.cell)


def test_hausdorff_singletons():
    space = GridSpace(((0, 1),), 1e-3)
    a, b = CompactSetApprox.from_points(space, [[0.0]]), CompactSetApprox.from_points(space, [[1.0]])
    assert hausdorff(a, b) == pytest.approx(1.0, abs=space.cell)
    assert hausdorff(a, a) == 0


def test_hausdorff_empty_raises():
    space = GridSpace(((0, 1),), 0.1)
    with pytest.raises(EmptySetDistance):
        hausdorff(CompactSetApprox.empty(space), CompactSetApprox.whole(space))


def _brute(space, a, b):
    d = np.array([[space.distance(int(p), int(q)) for q in b] for p in a])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


@given(st.sets(st.integers(0, 63), min_size=1, max_size=20), st.sets(st.integers(0, 63), min_size=1, max_size=20))
def test_hausdorff_matches_brute_force_on_grid(a, b):
    space = GridSpace(((0, 1), (0, 1)), 0.125)
    A = CompactSetApprox.from_ids(space, sorted(a))
    B = CompactSetApprox.from_ids(space, sorted(b))
    assert hausdorff(A, B) == pytest.approx(_brute(space, A.ids, B.ids))
    assert hausdorff(A, B) == pytest.approx(max(one_sided(A, B), one_sided(B, A)))
    assert gap(A, B) <= one_sided(A, B)


@given(st.sets(st.integers(0, 3**6 - 1), min_size=1, max_size=15), st.sets(st.integers(0, 3**6 - 1), min_size=1, max_size=15))
def test_hausdorff_matches_brute_force_on_symbols(a, b):
    space = SymbolSpace(3, 6)
    A = CompactSetApprox.from_ids(space, sorted(a))
    B = CompactSetApprox.from_ids(space, sorted(b))
    assert hausdorff(A, B) == pytest.approx(_brute(space, A.ids, B.ids))


@given(st.sets(st.integers(0, 99)), st.sets(st.integers(0, 99)))
def test_set_algebra_matches_python_sets(a, b):
    space = GridSpace(((0, 1),), 0.01)
    A = CompactSetApprox.from_ids(space, sorted(a))
    B = CompactSetApprox.from_ids(space, sorted(b))
    assert set((A | B).ids) == a | b
    assert set((A & B).ids) == a & b
    assert set((A - B).ids) == a - b
    assert (A <= B) == (a <= b)


def test_csv_round_trip(tmp_path):
    space = GridSpace(((0, 1), (0, 2)), 0.1)
    S = CompactSetApprox.from_ids(space, [0, 5, 17, 199])
    write_csv(S, tmp_path / "s.csv")
    assert read_csv(space, tmp_path / "s.csv") == S
    sym = SymbolSpace(3, 5)
    T = CompactSetApprox.from_ids(sym, [0, 7, 242])
    write_csv(T, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "00000"
    assert read_csv(sym, tmp_path / "t.csv") == T
