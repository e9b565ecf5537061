import math

import numpy as np
import pytest

from lifs.acceptance import _slab_cantor, adjacent_sum_digits
from lifs.ambient import CompactSetApprox, hausdorff
from lifs.code_space import enumerate_codespace
from lifs.errors import AtEndpoint, EmptyEndpointSet, Inconsistent
from lifs.ifs_core import attractor
from lifs.orbit_dynamics import (
    FiniteOrbit, OrbitStep, TwoSidedItinerary, classify_orbits, endpoint_gap, endpoint_gap_report, endpoints,
    extend_orbit, extended_shift_step, follow, infinite_core, make_itinerary, natural_extension_check,
    orbit_type, sample_itineraries, survivor_sets,
)


def test_orbit_from_p_is_empty(edge3):
    p = edge3.space.snap_point([0, 1])
    orbit = extend_orbit(edge3, p, 10)
    assert orbit.length == 0 and orbit.terminated


def test_orbit_from_q_has_length_one(edge3):
    q = edge3.space.snap_point([1, 1])
    orbit = extend_orbit(edge3, q, 10, "exhaustive")
    assert orbit.length == 1
    assert orbit.symbols == (4, 0)
    assert orbit.points[1] == edge3.space.snap_point([0, 1])
    orbit.check(edge3)


def test_fixed_point_orbit_runs_to_max(cantor):
    orbit = extend_orbit(cantor, cantor.space.snap_point([0]), 25)
    assert orbit.length == 25 and set(orbit.symbols) == {1}


def test_follow_rejects_bad_symbol(basins_ifs):
    with pytest.raises(Inconsistent):
        follow(basins_ifs, basins_ifs.space.snap_point([0.5]), [4])


def test_full_domain_survivors(cantor):
    S = survivor_sets(cantor, 6)
    assert all(len(W) == cantor.space.size for W in S.levels)
    assert not endpoints(cantor, 10)
    with pytest.raises(EmptyEndpointSet):
        endpoint_gap(cantor, 10)


def test_edge_system_core_and_endpoints(edge3):
    core = infinite_core(edge3, 20)
    assert hausdorff(core, _slab_cantor(edge3.space)) <= 5e-3
    assert endpoints(edge3, 20) == edge3.set_of([[1, 1], [0, 1]])
    rep = endpoint_gap_report(edge3, 20)
    assert 0.5 < rep.inf <= rep.sup


def test_symbolic_endpoints_are_images_of_words_with_11(symbolic):
    # A \ A_inf = f2(binary sequences containing the word 11), up to truncation
    sp = symbolic.space
    L = sp.length
    A = attractor(symbolic, L + 4)
    ends = A - survivor_sets(symbolic).final
    binary = symbolic.domain(1).cached_members(sp)
    digits = sp.digits(binary)
    has_11 = np.any((digits[:, :-1] == 1) & (digits[:, 1:] == 1), axis=1)
    # "11" in the first L-1 symbols is what the truncated f2 can see
    visible = np.any((digits[:, :-2] == 1) & (digits[:, 1:-1] == 1), axis=1)
    images = {"".join(map(str, d)) for d in digits[visible]}
    expected = {adjacent_sum_digits(s)[:L] for s in images}
    got = {sp.format_point(int(p)) for p in ends.ids}
    assert got == expected
    assert has_11.sum() >= visible.sum()


def test_symbolic_gap_shrinks_with_truncation(symbolic):
    from lifs.scene import load_ifs

    for L in (8, 10, 12):
        ifs = load_ifs("symbolic_shift.scene", length=L)
        assert endpoint_gap(ifs, L + 4) <= math.exp(-(L - 4)) + 1e-15


def test_extended_shift_on_fixed_point(cantor):
    it = make_itinerary(cantor, (1,) * 5, future=(1, 1, 1))
    nxt = extended_shift_step(cantor, it)
    assert len(nxt.past) == 6
    assert cantor.space.coords([nxt.x0])[0, 0] <= 3.0**-6 + cantor.space.cell


def test_type_four_orbit_stops_at_endpoint(edge3):
    it = make_itinerary(edge3, (1, 2, 1, 2), future=(3, 4))
    it = extended_shift_step(edge3, it)
    it = extended_shift_step(edge3, it)
    assert it.x0 == edge3.space.snap_point([0, 1])
    with pytest.raises(AtEndpoint):
        extended_shift_step(edge3, it)


def test_natural_extension_full_domain(halves):
    tree = enumerate_codespace(halves, 5)
    rep = natural_extension_check(halves, sample_itineraries(halves, tree, 40, seed=1))
    assert rep.ok and rep.max_deviation <= 2 * halves.snap_err
    assert rep.inverse_checked > 0 and rep.inverse_skipped == 0


def test_natural_extension_edge_system(edge3):
    tree = enumerate_codespace(edge3, 5)
    rep = natural_extension_check(edge3, sample_itineraries(edge3, tree, 60, seed=2))
    assert rep.ok and rep.inverse_skipped > 0


def test_inconsistent_seam_is_flagged(cantor):
    it = make_itinerary(cantor, (1, 1, 1), future=(1, 1))
    broken = TwoSidedItinerary(it.past, it.past_points,
                               FiniteOrbit((OrbitStep(cantor.space.snap_point([0.9]), 1),)))
    rep = natural_extension_check(cantor, [broken])
    assert rep.inconsistent == [0] and not rep.ok


@pytest.mark.parametrize("past, future, kind", [
    ((1, 2, 1), (1, 2), "I"),
    ((1, 2, 4), (0,), "II"),
    ((1, 2, 3, 4), (0,), "III"),
    ((1, 2, 3), (4, 0), "IV"),
])
def test_orbit_types(edge3, past, future, kind):
    it = make_itinerary(edge3, past, future=future)
    assert orbit_type(edge3, it) == kind


def test_classify_histogram(edge3, basins_ifs):
    tree = enumerate_codespace(edge3, 6)
    hist = classify_orbits(edge3, sample_itineraries(edge3, tree, 200, seed=3))
    assert set(hist) <= {"I", "II", "III", "IV"} and sum(hist.values()) == 200
    generic = classify_orbits(basins_ifs, sample_itineraries(basins_ifs, enumerate_codespace(basins_ifs, 4), 50))
    assert set(generic) <= {"infinite"} | {f"endpoint-{n}" for n in range(10)}
