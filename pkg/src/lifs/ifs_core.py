"""Local IFS model and the set-valued operator ``B -> U_j f_j(B & X_j)``."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ambient import (
    CompactSetApprox,
    GridSpace,
    MetricSpaceModel,
    SymbolSpace,
    hausdorff,
)
from .errors import (
    DomainNotNested,
    InvalidSymbol,
    LipschitzMismatch,
    NonContractive,
    NotGlobal,
    NotGlobalizable,
)

_LIP_SLACK = 1e-12


# --------------------------------------------------------------------------- maps


class ContractionMap:
    lip: float
    total: bool = True

    def apply(self, space: MetricSpaceModel, ids: np.ndarray) -> np.ndarray:
        """Snapped images of ``ids`` (any order, may contain duplicates)."""
        raise NotImplementedError

    def true_lip(self, space: MetricSpaceModel) -> Optional[float]:
        """Lipschitz constant computable in closed form, or None."""
        return None

    @property
    def contractive(self) -> bool:
        return self.lip < 1


@dataclass(frozen=True)
class Affine(ContractionMap):
    matrix: tuple
    offset: tuple
    lip: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("affine matrix must be square")
        object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in m))
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        if len(self.offset) != m.shape[0]:
            raise ValueError("affine offset has wrong length")

    @property
    def M(self) -> np.ndarray:
        return np.array(self.matrix)

    @property
    def b(self) -> np.ndarray:
        return np.array(self.offset)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.M.T + self.b

    def apply(self, space, ids):
        if not isinstance(space, GridSpace):
            raise TypeError("affine maps need a grid space")
        if len(ids) == 0:
            return np.zeros(0, dtype=np.int64)
        return space.snap(self.evaluate(space.coords(ids)))

    def true_lip(self, space):
        return float(np.linalg.norm(self.M, 2))

    def inverse(self) -> Optional["Affine"]:
        m = self.M
        if abs(np.linalg.det(m)) < 1e-14:
            return None
        inv = np.linalg.inv(m)
        return Affine(inv, -inv @ self.b, float(np.linalg.norm(inv, 2)))


@dataclass(frozen=True)
class ConstantPoint(ContractionMap):
    value: tuple
    lip: float = 0.0

    def apply(self, space, ids):
        return np.full(len(ids), space.snap_point(self.value), dtype=np.int64)

    def true_lip(self, space):
        return 0.0


@dataclass(frozen=True)
class SymbolPrepend(ContractionMap):
    """``x -> (s, x_1, x_2, ...)``; the last symbol falls off the truncation."""

    symbol: int
    lip: float = math.exp(-1)

    def apply(self, space, ids):
        if not isinstance(space, SymbolSpace):
            raise TypeError("symbol_prepend needs a symbol space")
        if not 0 <= self.symbol < space.alphabet:
            raise InvalidSymbol(f"symbol {self.symbol} outside alphabet")
        ids = np.asarray(ids, dtype=np.int64)
        top = space.alphabet ** (space.length - 1)
        return self.symbol * top + ids // space.alphabet

    def true_lip(self, space):
        return math.exp(-1)


@dataclass(frozen=True)
class AdjacentSum(ContractionMap):
    """``x -> (0, 0, x_1+x_2, x_2+x_3, ...)``, truncated to the space length."""

    lip: float = 0.5
    total = False

    def apply(self, space, ids):
        if not isinstance(space, SymbolSpace):
            raise TypeError("adjacent_sum needs a symbol space")
        d = space.digits(ids)
        out = np.zeros_like(d)
        out[:, 2:] = d[:, :-2] + d[:, 1:-1]
        if out.size and out.max() >= space.alphabet:
            raise InvalidSymbol("adjacent_sum image leaves the alphabet")
        return out @ space._powers


@dataclass(frozen=True)
class Identity(ContractionMap):
    """Bookkeeping map for the natural extension; never contractive."""

    lip: float = 1.0

    def apply(self, space, ids):
        return np.asarray(ids, dtype=np.int64)

    def true_lip(self, space):
        return 1.0


def sampled_lip(fmap: ContractionMap, space: MetricSpaceModel, ids: np.ndarray,
                pairs: int = 2000, seed: int = 0) -> float:
    """Largest ratio ``d(f p, f q) / d(p, q)`` over random pairs drawn from ``ids``."""
    rng = np.random.default_rng(seed)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size < 2:
        return 0.0
    p = rng.choice(ids, pairs)
    q = rng.choice(ids, pairs)
    keep = p != q
    p, q = p[keep], q[keep]
    fp, fq = fmap.apply(space, p), fmap.apply(space, q)
    best = 0.0
    for a, b, fa, fb in zip(p, q, fp, fq):
        best = max(best, space.distance(int(fa), int(fb)) / space.distance(int(a), int(b)))
    return best


# --------------------------------------------------------------------------- domains


class DomainSet:
    is_whole = False

    def members(self, space: MetricSpaceModel) -> np.ndarray:
        raise NotImplementedError

    def mask(self, space: MetricSpaceModel, ids: np.ndarray) -> np.ndarray:
        return np.isin(ids, self.cached_members(space), assume_unique=False)

    def cached_members(self, space) -> np.ndarray:
        cache = self.__dict__.setdefault("_members_cache", {})
        if space not in cache:
            cache[space] = self.members(space)
        return cache[space]

    def restrict(self, space, A: CompactSetApprox) -> CompactSetApprox:
        if self.is_whole:
            return A
        if A.full:
            return CompactSetApprox.sorted_unique(space, self.cached_members(space))
        ids = A.ids
        return CompactSetApprox.sorted_unique(space, ids[self.mask(space, ids)])

    def contains(self, space, p: int) -> bool:
        return bool(self.mask(space, np.array([p], dtype=np.int64))[0])


@dataclass(frozen=True)
class Whole(DomainSet):
    is_whole = True

    def members(self, space):
        return space.all_ids()

    def mask(self, space, ids):
        return np.ones(len(ids), dtype=bool)


@dataclass(frozen=True)
class BoxUnion(DomainSet):
    """Closed boxes; a cell belongs when its closed square meets some box."""

    boxes: tuple

    def __post_init__(self):
        boxes = tuple(tuple((float(lo), float(hi)) for lo, hi in box) for box in self.boxes)
        for box in boxes:
            for lo, hi in box:
                if lo > hi:
                    raise ValueError(f"box interval [{lo}, {hi}] is reversed")
        object.__setattr__(self, "boxes", boxes)

    def members(self, space):
        if not isinstance(space, GridSpace):
            raise TypeError("box domains need a grid space")
        parts = [space.box_members(box) for box in self.boxes]
        return np.unique(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)

    def mask(self, space, ids):
        ids = np.asarray(ids, dtype=np.int64)
        out = np.zeros(ids.size, dtype=bool)
        for box in self.boxes:
            out |= space.box_mask(ids, box)
        return out


@dataclass(frozen=True)
class FinitePoints(DomainSet):
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(tuple(p) if not isinstance(p, str) else p for p in self.points))

    def members(self, space):
        if not self.points:
            return np.zeros(0, dtype=np.int64)
        return np.unique(space.snap([list(p) for p in self.points]))


@dataclass(frozen=True)
class BinarySequences(DomainSet):
    """Strings using only the symbols in ``allowed``."""

    allowed: tuple = (0, 1)

    def members(self, space):
        if not isinstance(space, SymbolSpace):
            raise TypeError("sequence domains need a symbol space")
        allowed = np.array(sorted(set(self.allowed)), dtype=np.int64)
        if allowed.size and (allowed.min() < 0 or allowed.max() >= space.alphabet):
            raise InvalidSymbol("allowed symbol outside alphabet")
        ids = np.zeros(1, dtype=np.int64)
        for _ in range(space.length):
            ids = (ids[:, None] * space.alphabet + allowed[None, :]).ravel()
        return np.sort(ids)

    def mask(self, space, ids):
        d = space.digits(ids)
        return np.isin(d, np.array(self.allowed)).all(axis=1)


@dataclass(frozen=True)
class Explicit(DomainSet):
    ids: tuple

    def members(self, space):
        return np.unique(np.asarray(self.ids, dtype=np.int64))


@dataclass(frozen=True)
class UnionDomain(DomainSet):
    parts: tuple

    @property
    def is_whole(self):
        return any(p.is_whole for p in self.parts)

    def members(self, space):
        if self.is_whole:
            return space.all_ids()
        return np.unique(np.concatenate([p.cached_members(space) for p in self.parts]))

    def mask(self, space, ids):
        out = np.zeros(len(ids), dtype=bool)
        for p in self.parts:
            out |= p.mask(space, ids)
        return out


def domain_subset(space, small: DomainSet, big: DomainSet) -> bool:
    if big.is_whole:
        return True
    if small.is_whole:
        return False
    return bool(np.isin(small.cached_members(space), big.cached_members(space)).all())


# --------------------------------------------------------------------------- local IFS


@dataclass(frozen=True)
class Branch:
    domain: DomainSet
    map: ContractionMap
    label: str = ""


@dataclass(frozen=True, eq=False)
class LocalIFS:
    space: MetricSpaceModel
    branches: tuple
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise ValueError("a local IFS needs at least two branches")
        labelled = []
        for i, br in enumerate(self.branches, start=1):
            labelled.append(br if br.label else Branch(br.domain, br.map, str(i)))
        object.__setattr__(self, "branches", tuple(labelled))

    @property
    def n(self) -> int:
        return len(self.branches)

    @property
    def lam(self) -> float:
        return max(br.map.lip for br in self.branches)

    @property
    def contractive(self) -> bool:
        return all(br.map.lip < 1 for br in self.branches)

    @property
    def diam(self) -> float:
        return self.space.diameter

    @property
    def snap_err(self) -> float:
        """Accumulated snapping error along an infinite orbit."""
        lam = self.lam
        if lam >= 1:
            return math.inf
        return self.space.snap_error() / (1 - lam)

    @property
    def labels(self) -> list[str]:
        return [br.label for br in self.branches]

    def symbol_of(self, label) -> int:
        """1-based branch index for a label."""
        return self.labels.index(str(label)) + 1

    def domain(self, j: int) -> DomainSet:
        return self.branches[j - 1].domain

    def map(self, j: int) -> ContractionMap:
        return self.branches[j - 1].map

    @property
    def full_domains(self) -> bool:
        return all(br.domain.is_whole for br in self.branches)

    def whole(self) -> CompactSetApprox:
        return CompactSetApprox.whole(self.space)

    def point(self, coords) -> int:
        return self.space.snap_point(coords)

    def set_of(self, points) -> CompactSetApprox:
        return CompactSetApprox.from_points(self.space, points)

    def validate_lipschitz(self, sample_pairs: int = 2000) -> None:
        """Raise LipschitzMismatch when a declared constant is too small."""
        for br in self.branches:
            true = br.map.true_lip(self.space)
            if true is None:
                ids = br.domain.cached_members(self.space)
                true = sampled_lip(br.map, self.space, ids, sample_pairs)
            if true > br.map.lip + _LIP_SLACK:
                raise LipschitzMismatch(
                    f"branch {br.label}: declared lip {br.map.lip} below measured {true:.6g}"
                )


def apply_branch(ifs: LocalIFS, j: int, A: CompactSetApprox) -> CompactSetApprox:
    """``f_j(A & X_j)`` snapped to the space; j is 1-based."""
    br = ifs.branches[j - 1]
    part = br.domain.restrict(ifs.space, A)
    if not part:
        return CompactSetApprox.empty(ifs.space)
    return CompactSetApprox.from_ids(ifs.space, br.map.apply(ifs.space, part.ids))


def hutchinson(ifs: LocalIFS, A: CompactSetApprox) -> CompactSetApprox:
    if not A:
        return CompactSetApprox.empty(ifs.space)
    images = [apply_branch(ifs, j, A).ids for j in range(1, ifs.n + 1)]
    return CompactSetApprox.sorted_unique(ifs.space, np.unique(np.concatenate(images)))


def iterate(ifs: LocalIFS, A0: CompactSetApprox, k: int, operator=None) -> list[CompactSetApprox]:
    """``[A0, F(A0), ..., F^k(A0)]``."""
    op = operator or (lambda S: hutchinson(ifs, S))
    out = [A0]
    for _ in range(k):
        out.append(op(out[-1]))
    return out


def attractor(ifs: LocalIFS, k: int) -> CompactSetApprox:
    """``F^k(X)``; may be empty."""
    if not ifs.contractive:
        raise NonContractive("attractor needs every branch contractive")
    if k < 1:
        raise ValueError("depth must be at least 1")
    A = ifs.whole()
    for _ in range(k):
        A = hutchinson(ifs, A)
        if not A:
            break
    return A


def attractor_tolerance(ifs: LocalIFS, k: int) -> float:
    return ifs.lam**k * ifs.diam + ifs.snap_err


def default_tau(ifs: LocalIFS, k: int) -> float:
    return ifs.lam**k * ifs.diam + 2 * ifs.snap_err


@dataclass
class BasinReport:
    inv: bool
    out: bool
    attracted: bool
    first_empty_depth: Optional[int]
    distances: list
    tau: float
    depth: int

    def as_dict(self) -> dict:
        return {
            "inv": self.inv,
            "out": self.out,
            "attracted": self.attracted,
            "firstEmptyDepth": self.first_empty_depth,
            "distances": self.distances,
            "tau": self.tau,
            "depth": self.depth,
        }


def basin_classify(ifs: LocalIFS, A0: CompactSetApprox, k: int, tau: Optional[float] = None,
                   reference: Optional[CompactSetApprox] = None) -> BasinReport:
    if not A0:
        raise ValueError("basin classification needs a nonempty starting set")
    tau = default_tau(ifs, k) if tau is None else tau
    ref = attractor(ifs, k) if reference is None else reference
    iterates = iterate(ifs, A0, k)
    first_empty = next((i for i, S in enumerate(iterates) if not S), None)

    def dist(S):
        if not S or not ref:
            return None if (S or ref) else 0.0
        return hausdorff(S, ref)

    distances = [dist(S) for S in iterates]
    inv = hutchinson(ifs, A0).issubset(A0) and ref.issubset(A0)

    if first_empty is not None and ref:
        out = attracted = False
    else:
        nested = iterates[0]
        for S in iterates[1:]:
            nested = nested & S
        d_out = dist(nested)
        out = d_out is not None and d_out <= tau
        attracted = distances[-1] is not None and distances[-1] <= tau
    return BasinReport(inv, out, attracted, first_empty, distances, tau, k)


@dataclass
class RestrictionComparison:
    operator_monotone: bool
    attractor_monotone: bool


def compare_restrictions(ifs_t: LocalIFS, ifs_s: LocalIFS, K: CompactSetApprox, k: int) -> RestrictionComparison:
    if ifs_t.space != ifs_s.space or ifs_t.n != ifs_s.n:
        raise DomainNotNested("systems differ in space or branch count")
    for bt, bs in zip(ifs_t.branches, ifs_s.branches):
        if bt.map != bs.map:
            raise DomainNotNested("branch maps differ")
        if not domain_subset(ifs_t.space, bt.domain, bs.domain):
            raise DomainNotNested(f"domain of branch {bt.label} is not contained in its counterpart")
    op = hutchinson(ifs_t, K).issubset(hutchinson(ifs_s, K))
    att = attractor(ifs_t, k).issubset(attractor(ifs_s, k))
    return RestrictionComparison(op, att)


def with_domains(ifs: LocalIFS, domains: Sequence[DomainSet]) -> LocalIFS:
    branches = [Branch(d, br.map, br.label) for d, br in zip(domains, ifs.branches)]
    return LocalIFS(ifs.space, branches, ifs.title)


def global_ifs(ifs: LocalIFS) -> LocalIFS:
    """Same maps on the whole space."""
    for br in ifs.branches:
        if not br.map.total:
            raise NotGlobalizable(f"map of branch {br.label} has no total extension")
    return with_domains(ifs, [Whole()] * ifs.n)


def condensation_hutchinson(ifs: LocalIFS, C: CompactSetApprox, A: CompactSetApprox) -> CompactSetApprox:
    if not ifs.full_domains:
        raise NotGlobal("condensation needs every domain to be the whole space")
    if not C:
        raise NotGlobal("condensation set must be nonempty")
    return hutchinson(ifs, A) | C


def condensation_attractor(ifs: LocalIFS, C: CompactSetApprox, k: int) -> CompactSetApprox:
    A = ifs.whole()
    for _ in range(k):
        A = condensation_hutchinson(ifs, C, A)
    return A


def _touching(space, a: np.ndarray, b: np.ndarray) -> bool:
    if isinstance(space, GridSpace):
        return bool(np.intersect1d(space.dilate(a), b).size)
    return bool(np.intersect1d(a, b).size)


def osc_check(ifs: LocalIFS) -> bool:
    """True when the images ``f_j(X_j)`` are pairwise separated on the grid.

    Grid images that are adjacent cells count as touching, since the exact
    images may share a boundary point inside the common cell face.
    """
    images = [apply_branch(ifs, j, ifs.whole()).ids for j in range(1, ifs.n + 1)]
    for a, b in itertools.combinations(images, 2):
        if a.size and b.size and _touching(ifs.space, a, b):
            return False
    return True
