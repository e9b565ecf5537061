"""Acceptance criteria shared by the test suite and ``lifs verify --suite all``.

Each ``criterion_N`` returns a :class:`CriterionResult`; oracles used here are
written independently of the operator code they check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ambient import CompactSetApprox, GridSpace, gap, hausdorff, one_sided
from .code_space import (
    code_map,
    common_suffix,
    cylinder,
    enumerate_codespace,
    is_in_shift_image,
    sft_witness,
    verify_holder,
    verify_semiconjugacy,
)
from .essential import convergence_report
from .graph_directed import enrich, equivalence_check
from .ifs_core import (
    Affine,
    Branch,
    BoxUnion,
    ConstantPoint,
    FinitePoints,
    LocalIFS,
    Whole,
    attractor,
    basin_classify,
    condensation_attractor,
    global_ifs,
    hutchinson,
    iterate,
    sampled_lip,
)
from .orbit_dynamics import has_orbit_of_length, survivor_sets
from .render import CORE, ENDPOINT, read_pgm, render_attractor, pgm_bytes
from .scene import load_graph, load_ifs


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    checks: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} {self.name}: {self.detail}"


def _result(number: int, name: str, checks: dict, detail: str) -> CriterionResult:
    return CriterionResult(number, name, all(checks.values()), detail, checks)


# --------------------------------------------------------------------------- oracles


def cantor_distance(x: float, depth: int = 40) -> float:
    """Distance from x in [0, 1] to the middle-third Cantor set, by walking ternary digits."""
    scale = 1.0
    for _ in range(depth):
        if x <= 1 / 3:
            x *= 3
        elif x >= 2 / 3:
            x = 3 * x - 2
        else:
            return scale * min(x - 1 / 3, 2 / 3 - x)
        scale /= 3
    return 0.0


def cantor_cells(space: GridSpace, xs: np.ndarray, row_ids: np.ndarray) -> np.ndarray:
    """Cells whose closed extent meets the Cantor set; ``xs`` are cell centers."""
    outside = np.maximum(0.0, np.maximum(-xs, xs - 1))
    dist = np.array([cantor_distance(float(min(max(x, 0.0), 1.0))) for x in xs]) + outside
    return row_ids[dist <= space.cell / 2 * (1 + 1e-9)]


def _line_cantor(space: GridSpace) -> CompactSetApprox:
    ids = np.arange(space.shape[0], dtype=np.int64)
    xs = space.coords(ids)[:, 0]
    inside = xs <= 1 + space.cell / 2
    return CompactSetApprox.from_ids(space, cantor_cells(space, xs[inside], ids[inside]))


def _slab_cantor(space: GridSpace) -> CompactSetApprox:
    nx = space.shape[0]
    ids = space.from_multi_index(np.column_stack([np.arange(nx), np.zeros(nx, dtype=np.int64)]))
    xs = space.coords(ids)[:, 0]
    return CompactSetApprox.from_ids(space, cantor_cells(space, xs, ids))


# --------------------------------------------------------------------------- criteria


def criterion_1() -> CriterionResult:
    import time

    ifs = load_ifs("cantor_basins.scene")
    t0 = time.perf_counter()
    A = attractor(ifs, 20)
    elapsed = time.perf_counter() - t0
    oracle = _line_cantor(ifs.space) | ifs.set_of([[2]])
    d = hausdorff(A, oracle)
    checks = {"distance": d <= 5e-3, "runtime": elapsed < 10}
    return _result(1, "Cantor-plus-point attractor", checks,
                   f"dist_H = {d:.3g} (<= 5e-3), {len(A)} cells in {elapsed:.2f} s")


def criterion_2() -> CriterionResult:
    ifs = load_ifs("cantor_basins.scene")
    k = 20
    ref = attractor(ifs, k)
    C = _line_cantor(ifs.space)
    rows = {
        "C+{2,3}": (C | ifs.set_of([[2], [3]]), lambda r: r.out and not r.inv),
        "{0,2}": (ifs.set_of([[0], [2]]), lambda r: r.attracted and not r.out),
        "{3}": (ifs.set_of([[3]]), lambda r: not r.attracted),
        "X": (ifs.whole(), lambda r: r.inv),
    }
    checks, parts = {}, []
    for name, (A0, expect) in rows.items():
        r = basin_classify(ifs, A0, k, reference=ref)
        checks[name] = bool(expect(r))
        parts.append(f"{name}: inv={r.inv} out={r.out} attracted={r.attracted}")
    return _result(2, "basin table", checks, "; ".join(parts))


def ratio_floor(snap_err: float, lam: float, margin: float = 0.05) -> float:
    """Smallest distEss(k+1) at which a ratio test can resolve ``margin``.

    Both distances carry up to ``snap_err`` of grid error, so the ratio moves by
    at most ``snap_err (1 + lam) / d``; require that to stay under half the margin.
    """
    return 2 * snap_err * (1 + lam) / margin


def criterion_3() -> CriterionResult:
    ifs = load_ifs("cantor_basins.scene", cell=1e-5)
    rep = convergence_report(ifs, ifs.whole(), 10)
    lam = ifs.lam
    floor = ratio_floor(ifs.snap_err, lam)
    checks = {}
    for p in rep.series:
        checks[f"bound k={p.k}"] = p.dist_ess <= lam**p.k * 4 + 2 * rep.slack
    ratios = []
    for a, b in zip(rep.series, rep.series[1:]):
        if b.dist_ess >= floor:
            ratios.append(b.dist_ess / a.dist_ess)
            checks[f"ratio k={a.k}"] = ratios[-1] <= lam + 0.05
    checks["ratios tested"] = len(ratios) > 0
    worst = max(p.dist_ess / (lam**p.k * 4 + 2 * rep.slack) for p in rep.series)
    return _result(3, "essential-part convergence rate", checks,
                   f"max distEss/bound = {worst:.3f}; ratios above floor {floor:.1e}: "
                   + ", ".join(f"{r:.3f}" for r in ratios))


def sigma_words(k: int, tails) -> set:
    """Length-k suffixes of sequences in ``{1,2}^(-N) * t`` for each tail t."""
    out = set()
    for t in tails:
        head = k - len(t)
        if head < 0:
            out.add(tuple(t[-k:]))
            continue
        for w in itertools.product((1, 2), repeat=head):
            out.add(w + tuple(t))
    return out


def criterion_4() -> CriterionResult:
    checks, parts = {}, []
    for scene, tails in (("edge_cantor2.scene", [(), (3,)]), ("edge_cantor3.scene", [(), (3,), (4,), (3, 4)])):
        ifs = load_ifs(scene)
        tree = enumerate_codespace(ifs, 8)
        for k in range(1, 9):
            expected = sigma_words(k, tails)
            checks[f"{scene} k={k}"] = set(tree.words(k)) == expected
        parts.append(f"{scene}: counts {tree.counts()}")
    return _result(4, "code spaces with endpoint symbols", checks, "; ".join(parts))


def criterion_5() -> CriterionResult:
    ifs = load_ifs("edge_cantor3.scene")
    A = attractor(ifs, 20)
    W = survivor_sets(ifs).final
    ends, core = A - W, A & W
    expected = ifs.set_of([[1, 1], [0, 1]])
    d = hausdorff(core, _slab_cantor(ifs.space))
    g = gap(ends, core)
    checks = {"endpoints": ends == expected, "core": d <= 5e-3, "gap": g > 0.5}
    pts = ", ".join(ifs.space.format_point(int(p)) for p in ends.ids)
    return _result(5, "endpoints of the embedded Cantor system", checks,
                   f"endpoints [{pts}], core dist_H = {d:.3g}, gap = {g:.3f}")


def criterion_6() -> CriterionResult:
    ifs = load_ifs("symbolic_shift.scene")
    space = ifs.space
    L = space.length
    f2 = ifs.map(3)
    binary = ifs.domain(3).cached_members(space)
    lip = sampled_lip(f2, space, binary, pairs=4000)
    A = attractor(ifs, L + 4)
    W = survivor_sets(ifs).final
    ends, core = A - W, A & W
    checks = {"lipschitz": lip <= 0.5 + 1e-12}
    for n in range(1, 11):
        b = space.snap("0" * n + "11" + "0" * (L - n - 2))
        fb = int(f2.apply(space, np.array([b]))[0])
        checks[f"endpoint n={n}"] = fb in ends
        checks[f"distance n={n}"] = space.distance(b, fb) == math.exp(-n)
    g = gap(ends, core)
    checks["gap"] = g <= math.exp(-(L - 6))
    return _result(6, "symbolic endpoints accumulate", checks,
                   f"sampled lip {lip:.3f}, {len(ends)} endpoints, gap = {g:.3g} <= {math.exp(-(L - 6)):.3g}")


def adjacent_sum_digits(x: str) -> str:
    """``(0, 0, x1+x2, x2+x3, ...)`` on a digit string."""
    return "00" + "".join(str(int(a) + int(b)) for a, b in zip(x, x[1:]))


def criterion_7(prefix: int = 10) -> CriterionResult:
    ifs = load_ifs("symbolic_shift.scene")
    space = ifs.space
    k = 11
    d = k - 1
    two = ifs.symbol_of("2")
    lab = lambda s: tuple(ifs.symbol_of(ch) for ch in s)
    tree = enumerate_codespace(ifs, k)
    report = sft_witness(ifs, k, two, tree=tree)
    tail = "01" * 20  # the limit point (0, 1, 0, 1, ...)
    c = lab(("10" * k + "2")[-d:])
    b = c + (two,)
    pi = lambda w: space.format_point(code_map(ifs, w, tree).point)
    expect_c = adjacent_sum_digits(tail)
    expect_b = adjacent_sum_digits(expect_c)
    checks = {
        "c in image": is_in_shift_image(ifs, c, two),
        "pi(b)": pi(b)[:prefix] == expect_b[:prefix] and expect_b.startswith("000122"),
        "pi(c)": pi(c)[:prefix] == expect_c[:prefix],
    }
    parts = [f"pi(b) = {pi(b)}", f"pi(c) = {pi(c)}"]
    for m in range(1, 5):
        cm = lab(("10" * k + "11" + "10" * m + "2")[-d:])
        expect = adjacent_sum_digits("01" * m + "11" + tail)
        checks[f"c^{m} admissible"] = bool(cylinder(ifs, cm))
        checks[f"c^{m} outside image"] = not is_in_shift_image(ifs, cm, two)
        checks[f"c^{m} agreement"] = common_suffix(c, cm) == 2 * m + 1
        checks[f"c^{m} image"] = pi(cm)[:prefix] == expect[:prefix]
        parts.append(f"pi(c^{m}) = {pi(cm)}")
    checks["witness search"] = report.max_agreement >= 2 * 4 + 1
    return _result(7, "non-finite-type witnesses", checks,
                   f"max agreement {report.max_agreement}; " + "; ".join(parts))


def criterion_8() -> CriterionResult:
    one = load_graph("gd_one_vertex.scene")
    classical = load_ifs("cantor.scene")
    a = attractor(enrich(one), 15)
    b = attractor(classical, 15)
    same = bool(np.array_equal(a.ids, b.ids))
    rep = equivalence_check(load_graph("gd_two_vertex.scene"), 20)
    checks = {"one vertex": same, "two vertex": rep.ok}
    dist = ", ".join(f"{v}: {d:.3g}" for v, d in rep.distances.items())
    return _result(8, "graph-directed equivalence", checks,
                   f"one-vertex ids identical={same} ({len(a)} cells); two-vertex distances {dist} <= {rep.tolerance:.3g}")


def criterion_9() -> CriterionResult:
    checks, parts = {}, []
    for scene in ("cantor.scene", "cantor_basins.scene", "edge_cantor1.scene", "edge_cantor2.scene",
                  "edge_cantor3.scene"):
        ifs = load_ifs(scene)
        tree = enumerate_codespace(ifs, 8)
        semi = verify_semiconjugacy(ifs, tree, samples=100)
        hold = verify_holder(ifs, tree, samples=100)
        checks[f"{scene} semiconjugacy"] = semi.ok and semi.checked > 0
        checks[f"{scene} holder"] = hold.ok and hold.checked == 100
        parts.append(f"{scene}: {semi.checked} pairs max dev {semi.max_violation:.2g}, holder ratio {hold.max_ratio:.2f}")
    return _result(9, "semiconjugacy and Hoelder bounds", checks, "; ".join(parts))


# --------------------------------------------------------------------------- random small scenes


def random_small_ifs(rng: np.random.Generator, full: bool = False) -> LocalIFS:
    """Random contractive system on a grid of at most 64 cells."""
    if rng.random() < 0.5:
        N = int(rng.integers(4, 65))
        space = GridSpace(((0.0, 1.0),), 1.0 / N)
        dim = 1
    else:
        N = int(rng.integers(2, 9))
        space = GridSpace(((0.0, 1.0), (0.0, 1.0)), 1.0 / N)
        dim = 2
    branches = []
    for _ in range(int(rng.integers(2, 5))):
        if rng.random() < 0.2:
            fmap = ConstantPoint(tuple(rng.random(dim)), 0.0)
        else:
            s = float(rng.uniform(0.1, 0.8))
            flip = rng.random() < 0.3
            lo = rng.uniform(0, 1 - s, dim)
            M = np.eye(dim) * (-s if flip else s)
            b = lo + (s if flip else 0.0)
            fmap = Affine(M, b, s)
        if full or rng.random() < 0.25:
            dom = Whole()
        elif rng.random() < 0.8:
            boxes = []
            for _ in range(int(rng.integers(1, 3))):
                a, c = np.sort(rng.random((2, dim)), axis=0)
                boxes.append(tuple(zip(a, c)))
            dom = BoxUnion(tuple(boxes))
        else:
            dom = FinitePoints(tuple(tuple(p) for p in rng.random((int(rng.integers(1, 4)), dim))))
        branches.append(Branch(dom, fmap))
    return LocalIFS(space, branches)


def _random_subset(rng, space) -> CompactSetApprox:
    ids = np.arange(space.size, dtype=np.int64)
    return CompactSetApprox.from_ids(space, ids[rng.random(space.size) < rng.random()])


def structural_checks(ifs: LocalIFS, rng: np.random.Generator) -> dict:
    """Invariants every local system must satisfy; keys name the property."""
    space = ifs.space
    X = ifs.whole()
    k = space.size + 1
    out = {}
    B = _random_subset(rng, space)
    C = B | _random_subset(rng, space)
    out["monotone"] = hutchinson(ifs, B).issubset(hutchinson(ifs, C))
    out["empty"] = not hutchinson(ifs, CompactSetApprox.empty(space))
    its = iterate(ifs, X, k)
    out["nested"] = all(b.issubset(a) for a, b in zip(its, its[1:]))
    A = its[-1]
    A_R = attractor(global_ifs(ifs), k)
    out["local in global"] = A.issubset(A_R)
    W = survivor_sets(ifs).final
    core = A & W
    out["core in attractor"] = core.issubset(A) and (A - W).issubset(A)
    survives = [has_orbit_of_length(ifs, int(x), space.size + 1) for x in range(space.size)]
    out["survivors match orbit search"] = np.array_equal(np.flatnonzero(survives), W.ids)
    return out


def condensation_checks(ifs: LocalIFS, rng: np.random.Generator) -> dict:
    """Condensation attractor equals A_R iff C lies in A_R, to one cell."""
    space = ifs.space
    k = space.size + 1
    A_R = attractor(ifs, k)
    out = {}
    inside = CompactSetApprox.from_ids(space, rng.choice(A_R.ids, min(3, len(A_R)), replace=False))
    out["inside"] = hausdorff(condensation_attractor(ifs, inside, k), A_R) <= space.cell * (1 + 1e-9)
    far_ids = np.arange(space.size)[space.min_distances(np.arange(space.size), A_R.ids) > 1.5 * space.cell * math.sqrt(space.dim)]
    if far_ids.size:
        far = CompactSetApprox.from_ids(space, far_ids[:1])
        out["outside"] = hausdorff(condensation_attractor(ifs, far, k), A_R) > space.cell
    return out


def criterion_10(scenes: int = 60, seed: int = 20240) -> CriterionResult:
    rng = np.random.default_rng(seed)
    tally: dict = {}
    for i in range(scenes):
        ifs = random_small_ifs(rng)
        for name, ok in structural_checks(ifs, rng).items():
            tally.setdefault(name, []).append(ok)
        g = random_small_ifs(rng, full=True)
        for name, ok in condensation_checks(g, rng).items():
            tally.setdefault(f"condensation {name}", []).append(ok)
    checks = {name: all(v) for name, v in tally.items()}
    detail = ", ".join(f"{name} {sum(v)}/{len(v)}" for name, v in tally.items())
    return _result(10, "structural invariants on random small scenes", checks, detail)


def criterion_11() -> CriterionResult:
    ifs = load_ifs("maple_sierpinski.scene")
    space = ifs.space
    A = attractor(ifs, 15)
    W = survivor_sets(ifs).final
    img = render_attractor(space, A & W, A - W)
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "maple.pgm"
        path.write_bytes(pgm_bytes(img))
        img = read_pgm(path)
    (x0, _), (y0, _) = space.bounds
    ny = img.shape[0]

    def region(xlo, xhi, ylo, yhi):
        c0, c1 = int(round((xlo - x0) / space.cell)), int(round((xhi - x0) / space.cell))
        r0, r1 = ny - int(round((yhi - y0) / space.cell)), ny - int(round((ylo - y0) / space.cell))
        return img[r0:r1, c0:c1]

    leaf = region(0, 1, 0, 1)
    triangle = region(1, 2, 1, 2)
    copy = region(1.2, 1.8, 0.2, 0.8)
    checks = {
        "leaf black": int((leaf == CORE).sum()) > 0.1 * leaf.size,
        "triangle black": int((triangle == CORE).sum()) > 0.1 * triangle.size,
        "copy grey": int((copy == ENDPOINT).sum()) > 0.1 * copy.size,
        "copy has no black": int((copy == CORE).sum()) == 0,
        "sets disjoint": not (A & W) & (A - W),
    }
    return _result(11, "maple leaf and triangle render", checks,
                   f"black in leaf {(leaf == CORE).mean():.2f}, black in triangle {(triangle == CORE).mean():.2f}, "
                   f"grey in copy {(copy == ENDPOINT).mean():.2f}, black in copy {int((copy == CORE).sum())}")


CRITERIA: list[Callable[[], CriterionResult]] = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
]


def run_all() -> list[CriterionResult]:
    return [c() for c in CRITERIA]
