"""Forward orbits, the infinite-orbit core, endpoints and two-sided itineraries.

Symbol 0 is the identity branch of the natural extension: it is used only
once an orbit reaches a point outside every domain.
"""
from __future__ import annotations

import math
import sys
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .ambient import CompactSetApprox, gap, one_sided
from .code_space import CodeTree, address, code_map, check_word
from .errors import AtEndpoint, EmptyEndpointSet, Inconsistent
from .ifs_core import Affine, ConstantPoint, LocalIFS, attractor


def step_point(ifs: LocalIFS, x: int, j: int) -> int:
    """``snap(f_j(x))``; j = 0 is the identity."""
    if j == 0:
        return int(x)
    return int(ifs.map(j).apply(ifs.space, np.array([x], dtype=np.int64))[0])


@dataclass(frozen=True)
class OrbitStep:
    point: int
    symbol: int


@dataclass(frozen=True)
class FiniteOrbit:
    steps: tuple

    @property
    def length(self) -> int:
        """Index of the first symbol-0 step, or the number of steps."""
        for i, s in enumerate(self.steps):
            if s.symbol == 0:
                return i
        return len(self.steps)

    @property
    def symbols(self) -> tuple:
        return tuple(s.symbol for s in self.steps)

    @property
    def points(self) -> tuple:
        return tuple(s.point for s in self.steps)

    @property
    def terminated(self) -> bool:
        return any(s.symbol == 0 for s in self.steps)

    def check(self, ifs: LocalIFS) -> None:
        seen_zero = False
        for a, b in zip(self.steps, self.steps[1:] + (None,)):
            if seen_zero and a.symbol != 0:
                raise Inconsistent("nonzero symbol after the orbit ended")
            if a.symbol == 0:
                seen_zero = True
                if address(ifs, a.point):
                    raise Inconsistent("symbol 0 at a point inside some domain")
            elif a.symbol not in address(ifs, a.point):
                raise Inconsistent(f"symbol {a.symbol} not admissible at point {a.point}")
            if b is not None and b.point != step_point(ifs, a.point, a.symbol):
                raise Inconsistent("consecutive orbit points do not match the map")

    def as_list(self, ifs: LocalIFS) -> list:
        return [{"point": ifs.space.format_point(s.point), "symbol": s.symbol} for s in self.steps]


def _close(steps: list, ifs: LocalIFS, x: int) -> FiniteOrbit:
    steps.append(OrbitStep(x, 0))
    return FiniteOrbit(tuple(steps))


def follow(ifs: LocalIFS, x: int, symbols: Sequence[int]) -> FiniteOrbit:
    """Orbit driven by the given symbols; fails on an inadmissible symbol."""
    steps = []
    for a in symbols:
        if a == 0:
            if address(ifs, x):
                raise Inconsistent("symbol 0 at a point inside some domain")
            return _close(steps, ifs, x)
        if a not in address(ifs, x):
            raise Inconsistent(f"symbol {a} not admissible at point {x}")
        steps.append(OrbitStep(x, a))
        x = step_point(ifs, x, a)
    if not address(ifs, x):
        return _close(steps, ifs, x)
    return FiniteOrbit(tuple(steps))


def extend_orbit(ifs: LocalIFS, x: int, max_len: int, strategy: str = "greedy",
                 rng: Optional[np.random.Generator] = None) -> FiniteOrbit:
    """Forward orbit of x of at most ``max_len`` nonzero steps.

    ``greedy`` takes the smallest admissible symbol, ``random`` a uniform one,
    ``exhaustive`` backtracks (smallest symbol first) for an orbit of full
    length and otherwise returns a longest one.
    """
    if strategy == "exhaustive":
        return _exhaustive(ifs, int(x), max_len)
    steps = []
    x = int(x)
    for _ in range(max_len):
        psi = sorted(address(ifs, x))
        if not psi:
            return _close(steps, ifs, x)
        if strategy == "greedy":
            a = psi[0]
        elif strategy == "random":
            a = psi[int((rng or np.random.default_rng(0)).integers(len(psi)))]
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        steps.append(OrbitStep(x, a))
        x = step_point(ifs, x, a)
    return FiniteOrbit(tuple(steps))


def _exhaustive(ifs: LocalIFS, x0: int, max_len: int) -> FiniteOrbit:
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * max_len + 100))
    try:
        @lru_cache(maxsize=None)
        def best(x: int, remaining: int) -> int:
            # longest orbit length from x, capped at remaining
            if remaining == 0:
                return 0
            out = 0
            for a in sorted(address(ifs, x)):
                out = max(out, 1 + best(step_point(ifs, x, a), remaining - 1))
                if out == remaining:
                    break
            return out

        steps = []
        x = x0
        remaining = max_len
        while remaining:
            target = best(x, remaining)
            if target == 0:
                return _close(steps, ifs, x)
            for a in sorted(address(ifs, x)):
                y = step_point(ifs, x, a)
                if 1 + best(y, remaining - 1) == target:
                    break
            steps.append(OrbitStep(x, a))
            x, remaining = y, remaining - 1
        return FiniteOrbit(tuple(steps))
    finally:
        sys.setrecursionlimit(limit)


def has_orbit_of_length(ifs: LocalIFS, x: int, n: int) -> bool:
    """Brute-force search for an orbit with n nonzero steps."""
    return extend_orbit(ifs, x, n, "exhaustive").length >= n


# --------------------------------------------------------------------------- survivors


@dataclass
class SurvivorSet:
    levels: list  # W_1, W_2, ... (W_0 is the whole space)
    stabilized_at: Optional[int]

    @property
    def final(self) -> CompactSetApprox:
        return self.levels[-1]

    def as_dict(self) -> dict:
        return {"levels": [len(W) for W in self.levels], "stabilizedAt": self.stabilized_at}


def survivor_sets(ifs: LocalIFS, depth: Optional[int] = None, max_levels: int = 100_000) -> SurvivorSet:
    """``W_{k+1} = {x : x in X_j and f_j(x) in W_k for some j}``, from ``W_1 = U X_j``.

    Stops at ``depth`` levels, or at the first repeated level when depth is None.
    """
    space = ifs.space
    sources, images = [], []
    for j in range(1, ifs.n + 1):
        src = ifs.domain(j).restrict(space, ifs.whole()).ids
        sources.append(src)
        images.append(ifs.map(j).apply(space, src) if src.size else src)
    W = CompactSetApprox.from_ids(space, np.concatenate(sources))
    levels = [W]
    stabilized = None
    cap = depth if depth is not None else max_levels
    while len(levels) < cap:
        alive = [src[np.isin(img, W.ids)] for src, img in zip(sources, images)]
        nxt = CompactSetApprox.from_ids(space, np.concatenate(alive))
        if nxt == W:
            stabilized = len(levels)
            levels.extend([W] * (cap - len(levels)) if depth is not None else [])
            break
        levels.append(nxt)
        W = nxt
    return SurvivorSet(levels, stabilized)


def infinite_core(ifs: LocalIFS, k: int, ell: Optional[int] = None,
                  A: Optional[CompactSetApprox] = None) -> CompactSetApprox:
    """``A^inf``: attractor points that survive ell backward levels."""
    A = attractor(ifs, k) if A is None else A
    return A & survivor_sets(ifs, ell).final


def endpoints(ifs: LocalIFS, k: int, ell: Optional[int] = None,
              A: Optional[CompactSetApprox] = None) -> CompactSetApprox:
    A = attractor(ifs, k) if A is None else A
    return A - survivor_sets(ifs, ell).final


@dataclass
class EndpointGap:
    inf: float
    sup: float


def endpoint_gap_report(ifs: LocalIFS, k: int, ell: Optional[int] = None,
                        A: Optional[CompactSetApprox] = None) -> EndpointGap:
    A = attractor(ifs, k) if A is None else A
    W = survivor_sets(ifs, ell).final
    E, core = A - W, A & W
    if not E:
        raise EmptyEndpointSet("the attractor approximation has no endpoints")
    if not core:
        raise EmptyEndpointSet("the infinite-orbit core is empty")
    return EndpointGap(gap(E, core), one_sided(E, core))


def endpoint_gap(ifs: LocalIFS, k: int, ell: Optional[int] = None,
                 A: Optional[CompactSetApprox] = None) -> float:
    """Smallest distance from an endpoint to the infinite-orbit core."""
    return endpoint_gap_report(ifs, k, ell, A).inf


# --------------------------------------------------------------------------- itineraries


@dataclass(frozen=True)
class TwoSidedItinerary:
    past: tuple  # word (b_-k, ..., b_-1)
    past_points: tuple  # (x_-k, ..., x_-1)
    future: FiniteOrbit  # starts at x_0

    @property
    def x0(self) -> int:
        return self.future.steps[0].point


def pre_orbit(ifs: LocalIFS, past: Sequence[int]) -> tuple:
    """Points ``x_-k..x_-1`` realizing the word, ending at the smallest reachable x_0.

    Returns ``(past_points, x0)``; empty word allowed.
    """
    past = tuple(past)
    if not past:
        return (), None
    space = ifs.space
    origin = ifs.domain(past[0]).restrict(space, ifs.whole()).ids
    trail = [origin]
    cur = origin
    for i, j in enumerate(past):
        if i > 0:
            keep = ifs.domain(j).mask(space, cur)
            trail = [t[keep] for t in trail]
            cur = trail[-1]
        if not cur.size:
            raise Inconsistent(f"word {past} is not admissible")
        cur = ifs.map(j).apply(space, cur)
        trail.append(cur)
    pick = int(np.argmin(cur))
    points = tuple(int(t[pick]) for t in trail)
    return points[:-1], points[-1]


def make_itinerary(ifs: LocalIFS, past: Sequence[int], future: Optional[Sequence[int]] = None,
                   max_len: int = 8, strategy: str = "greedy",
                   rng: Optional[np.random.Generator] = None) -> TwoSidedItinerary:
    past = check_word(ifs, past)
    pts, x0 = pre_orbit(ifs, past)
    orbit = follow(ifs, x0, future) if future is not None else extend_orbit(ifs, x0, max_len, strategy, rng)
    if not orbit.steps:
        orbit = FiniteOrbit((OrbitStep(x0, 0),))
    return TwoSidedItinerary(past, pts, orbit)


def extended_shift_step(ifs: LocalIFS, it: TwoSidedItinerary) -> TwoSidedItinerary:
    """``(b, a) -> (b * a_0, sigma(a))``."""
    head = it.future.steps[0]
    if head.symbol == 0:
        raise AtEndpoint("the orbit has ended; no further shift is defined")
    x0, a0 = head.point, head.symbol
    if a0 not in address(ifs, x0):
        raise Inconsistent(f"symbol {a0} not admissible at the current point")
    x1 = step_point(ifs, x0, a0)
    rest = it.future.steps[1:]
    if not rest:
        psi = sorted(address(ifs, x1))
        rest = (OrbitStep(x1, psi[0] if psi else 0),)
    if rest[0].point != x1:
        raise Inconsistent("future does not continue the current point")
    new = TwoSidedItinerary(it.past + (a0,), it.past_points + (x0,), FiniteOrbit(rest))
    tol = ifs.lam ** len(new.past) * ifs.diam + 2 * ifs.snap_err
    if ifs.space.distance(code_map(ifs, new.past).point, x1) > tol:
        raise Inconsistent("code point of the extended past disagrees with the orbit")
    return new


@dataclass
class NaturalExtensionReport:
    checked: int
    max_deviation: float
    tolerance: float
    inconsistent: list
    inverse_checked: int
    inverse_max_deviation: float
    inverse_tolerance: float
    inverse_skipped: int
    verified_depth: int

    @property
    def ok(self) -> bool:
        return (not self.inconsistent and self.max_deviation <= self.tolerance
                and self.inverse_max_deviation <= self.inverse_tolerance)


def _seam_ok(ifs: LocalIFS, it: TwoSidedItinerary) -> bool:
    try:
        it.future.check(ifs)
    except Inconsistent:
        return False
    pts = it.past_points + (it.x0,)
    for i, b in enumerate(it.past):
        if b not in address(ifs, pts[i]) or step_point(ifs, pts[i], b) != pts[i + 1]:
            return False
    return True


def natural_extension_check(ifs: LocalIFS, samples: Sequence[TwoSidedItinerary]) -> NaturalExtensionReport:
    """Check ``S(x_-1, b) = (f_{b_-1}(x_-1), sigma(b))`` along every sample.

    Each sample is checked at every past position (the k-admissibility
    bookkeeping) and the seam into the future.  Where the branch is an
    invertible affine map the inverse diagram ``x_-1 = f^{-1}(x_0)`` is also
    checked in continuous coordinates; other branches are counted as skipped.
    """
    space = ifs.space
    tol = 2 * ifs.snap_err
    step_err = space.snap_error()
    worst = 0.0
    inv_worst = 0.0
    inv_tol = 0.0
    inv_checked = inv_skipped = 0
    bad = []
    depth = 0
    for n, it in enumerate(samples):
        if not _seam_ok(ifs, it):
            bad.append(n)
            continue
        depth = max(depth, len(it.past))
        pts = it.past_points + (it.x0,)
        for i, b in enumerate(it.past):
            worst = max(worst, space.distance(step_point(ifs, pts[i], b), pts[i + 1]))
            fmap = ifs.map(b)
            inv = fmap.inverse() if isinstance(fmap, Affine) else None
            if inv is None:
                inv_skipped += 1
                continue
            back = inv.evaluate(space.coords([pts[i + 1]]))[0]
            dev = float(np.linalg.norm(back - space.coords([pts[i]])[0]))
            inv_worst = max(inv_worst, dev)
            inv_tol = max(inv_tol, inv.true_lip(space) * step_err * (1 + 1e-9))
            inv_checked += 1
    return NaturalExtensionReport(len(samples), worst, tol, bad, inv_checked, inv_worst,
                                  inv_tol, inv_skipped, depth)


def sample_itineraries(ifs: LocalIFS, tree: CodeTree, count: int, max_len: int = 6,
                       seed: int = 0, strategy: str = "random") -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = int(rng.integers(1, tree.depth + 1))
        words = tree.levels[d - 1].words
        w = tuple(int(s) for s in words[rng.integers(len(words))])
        out.append(make_itinerary(ifs, w, max_len=max_len, strategy=strategy, rng=rng))
    return out


# --------------------------------------------------------------------------- orbit types


def _looks_like_four_type(ifs: LocalIFS) -> bool:
    """Two constant branches: f_3 lands only in X_4 and f_4 lands outside every domain."""
    if ifs.n != 4 or not all(isinstance(ifs.map(j), ConstantPoint) for j in (3, 4)):
        return False
    q, p = (ifs.space.snap_point(ifs.map(j).value) for j in (3, 4))
    return address(ifs, q) == {4} and not address(ifs, p)


def orbit_type(ifs: LocalIFS, it: TwoSidedItinerary) -> str:
    """Type I-IV of an itinerary for the four-branch Cantor-plus-points system.

    I: only symbols 1, 2.  II: the nonzero symbols end in (x, 4) with x in
    {1, 2}.  III: they end in (3, 4) inside the past.  IV: they end in 3 or
    in (3, 4) with the 4 still in the future.
    """
    fut = tuple(a for a in it.future.symbols if a != 0)
    seq = it.past + fut
    if not set(seq) & {3, 4}:
        return "I"
    if seq[-1] == 4 and (len(seq) < 2 or seq[-2] != 3):
        return "II"
    if seq[-1] == 4 and seq[-2] == 3 and len(fut) == 0:
        return "III"
    return "IV"


def classify_orbits(ifs: LocalIFS, itineraries: Sequence[TwoSidedItinerary]) -> Counter:
    hist = Counter()
    four = _looks_like_four_type(ifs)
    for it in itineraries:
        if four:
            hist[orbit_type(ifs, it)] += 1
        elif it.future.terminated:
            hist[f"endpoint-{it.future.length}"] += 1
        else:
            hist["infinite"] += 1
    return hist
