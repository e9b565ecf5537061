"""Discretized compact metric spaces and finite approximations of compact sets.

Two backends are provided:

* :class:`GridSpace` -- an axis-aligned box in R^dim cut into cubic cells of
  side ``h``.  A point is represented by the cell whose center is nearest.
* :class:`SymbolSpace` -- strings of length ``L`` over ``{0, ..., A-1}``,
  standing in for one-sided sequences with ``d(x, y) = exp(-N)``, ``N`` the
  length of the longest common prefix.

Point ids are plain ``int64`` values ordered so that numeric order equals the
lexicographic order of the underlying multi-index / string.  A
:class:`CompactSetApprox` is a sorted duplicate-free id array.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySetDistance, InvalidSymbol, OutOfBounds

# Materializing the full space beyond this many ids is refused.
FULL_MATERIALIZE_CAP = 20_000_000

_EPS = 1e-9


def _workers() -> int:
    value = os.environ.get("LIFS_THREADS")
    if not value:
        return -1
    return max(1, int(value))


class MetricSpaceModel:
    """Common surface of the space backends."""

    size: int
    diameter: float

    def snap_error(self) -> float:
        """Worst-case distance between a point and its snapped representative."""
        raise NotImplementedError

    def all_ids(self) -> np.ndarray:
        if self.size > FULL_MATERIALIZE_CAP:
            raise MemoryError(f"refusing to materialize {self.size} points")
        return np.arange(self.size, dtype=np.int64)

    def min_distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """For each id in ``a`` the distance to the nearest id in ``b``."""
        raise NotImplementedError

    def distance(self, p: int, q: int) -> float:
        raise NotImplementedError

    def format_point(self, p: int) -> str:
        raise NotImplementedError

    def validate_ids(self, ids: np.ndarray) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.size):
            raise ValueError("point id outside the space")


@dataclass(frozen=True, eq=True)
class GridSpace(MetricSpaceModel):
    """Euclidean box ``prod [lo_a, hi_a]`` with cubic cells of side ``cell``."""

    bounds: tuple[tuple[float, float], ...]
    cell: float

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds:
            raise ValueError("grid needs at least one axis")
        if self.cell <= 0:
            raise ValueError("cell size must be positive")
        for lo, hi in bounds:
            if not lo < hi:
                raise ValueError(f"empty axis [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(max(1, math.ceil((hi - lo) / self.cell - _EPS)) for lo, hi in self.bounds)

    @cached_property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @cached_property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def snap_error(self) -> float:
        return self.cell * math.sqrt(self.dim) / 2

    def multi_index(self, ids: np.ndarray) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(ids, dtype=np.int64), self.shape), axis=-1)

    def from_multi_index(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return np.ravel_multi_index(tuple(idx.T), self.shape).astype(np.int64)

    def coords(self, ids) -> np.ndarray:
        """Cell centers, shape ``(len(ids), dim)``."""
        return self.lo + (self.multi_index(ids) + 0.5) * self.cell

    def snap(self, coords) -> np.ndarray:
        """Nearest cell center; exact ties go to the lower index on each axis."""
        pts = np.atleast_2d(np.asarray(coords, dtype=float))
        if pts.shape[-1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        slack = self.cell / 2 * (1 + 1e-7)
        if np.any(pts < self.lo - slack) or np.any(pts > self.hi + slack):
            bad = pts[np.any((pts < self.lo - slack) | (pts > self.hi + slack), axis=1)][0]
            raise OutOfBounds(f"point {bad.tolist()} lies outside {list(self.bounds)}")
        t = (pts - self.lo) / self.cell - 0.5
        idx = np.ceil(t - 0.5).astype(np.int64)
        idx = np.clip(idx, 0, np.array(self.shape) - 1)
        return self.from_multi_index(idx)

    def snap_point(self, coords) -> int:
        return int(self.snap(coords)[0])

    def distance(self, p: int, q: int) -> float:
        c = self.coords(np.array([p, q]))
        return float(np.linalg.norm(c[0] - c[1]))

    def min_distances(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.size == 0:
            return np.zeros(0)
        tree = cKDTree(self.coords(b))
        dist, _ = tree.query(self.coords(a), k=1, workers=_workers())
        return np.asarray(dist, dtype=float)

    def dilate(self, ids) -> np.ndarray:
        """Ids together with every cell sharing a face, edge or corner."""
        idx = self.multi_index(ids)
        shape = np.array(self.shape)
        out = []
        for offset in np.array(np.meshgrid(*[[-1, 0, 1]] * self.dim, indexing="ij")).reshape(self.dim, -1).T:
            moved = idx + offset
            ok = np.all((moved >= 0) & (moved < shape), axis=1)
            out.append(self.from_multi_index(moved[ok]))
        return np.unique(np.concatenate(out))

    def box_mask(self, ids, box: Sequence[tuple[float, float]]) -> np.ndarray:
        """Cells whose closed square meets the closed box (degenerate boxes allowed)."""
        c = self.coords(ids)
        half = self.cell / 2
        tol = _EPS * self.cell
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        return np.all((c + half >= lo - tol) & (c - half <= hi + tol), axis=1)

    def box_members(self, box: Sequence[tuple[float, float]]) -> np.ndarray:
        ranges = []
        for axis, (blo, bhi) in enumerate(box):
            lo = self.bounds[axis][0]
            n = self.shape[axis]
            tol = _EPS * self.cell
            # centers c_i = lo + (i + 1/2) h; keep i with c_i + h/2 >= blo and c_i - h/2 <= bhi
            first = max(0, math.ceil((blo - tol - lo) / self.cell - 1))
            last = min(n - 1, math.floor((bhi + tol - lo) / self.cell))
            cand = np.arange(max(0, first - 1), min(n, last + 2))
            centers = lo + (cand + 0.5) * self.cell
            keep = (centers + self.cell / 2 >= blo - tol) & (centers - self.cell / 2 <= bhi + tol)
            ranges.append(cand[keep])
        if any(r.size == 0 for r in ranges):
            return np.zeros(0, dtype=np.int64)
        mesh = np.meshgrid(*ranges, indexing="ij")
        idx = np.stack([m.ravel() for m in mesh], axis=-1)
        return np.sort(self.from_multi_index(idx))

    def format_point(self, p: int) -> str:
        return ",".join(repr(float(v)) for v in self.coords(np.array([p]))[0])


@dataclass(frozen=True, eq=True)
class SymbolSpace(MetricSpaceModel):
    """Length-``length`` strings over ``{0..alphabet-1}`` with ``d = exp(-lcp)``."""

    alphabet: int
    length: int

    def __post_init__(self):
        if self.alphabet < 2:
            raise ValueError("alphabet needs at least two symbols")
        if self.length < 4:
            raise ValueError("truncation length must be at least 4")
        if self.length * math.log2(self.alphabet) >= 62:
            raise ValueError("symbol space too large for 64-bit ids")

    @property
    def size(self) -> int:
        return self.alphabet**self.length

    @property
    def diameter(self) -> float:
        return 1.0

    def snap_error(self) -> float:
        return math.exp(-self.length)

    @cached_property
    def _powers(self) -> np.ndarray:
        return self.alphabet ** np.arange(self.length - 1, -1, -1, dtype=np.int64)

    def digits(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        return (ids[:, None] // self._powers[None, :]) % self.alphabet

    def from_digits(self, digits) -> np.ndarray:
        d = np.atleast_2d(np.asarray(digits, dtype=np.int64))
        if d.size and (d.min() < 0 or d.max() >= self.alphabet):
            raise InvalidSymbol(f"symbol outside alphabet of size {self.alphabet}")
        return d @ self._powers

    def snap(self, strings) -> np.ndarray:
        """Truncate sequences (each at least ``length`` long) to ``length`` symbols."""
        rows = [list(s) for s in ([strings] if _is_single_string(strings) else strings)]
        out = []
        for row in rows:
            syms = [int(c) for c in row]
            if len(syms) < self.length:
                raise InvalidSymbol(f"sequence shorter than truncation length {self.length}")
            out.append(syms[: self.length])
        return self.from_digits(np.array(out, dtype=np.int64))

    def snap_point(self, string) -> int:
        return int(self.snap(string)[0])

    def coords(self, ids) -> np.ndarray:
        return self.digits(ids)

    def lcp(self, a, b) -> np.ndarray:
        da, db = self.digits(a), self.digits(b)
        return np.cumprod(da == db, axis=1).sum(axis=1)

    def distance(self, p: int, q: int) -> float:
        if p == q:
            return 0.0
        return math.exp(-int(self.lcp([p], [q])[0]))

    def min_distances(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.size == 0:
            return np.zeros(0)
        # In lexicographic order the longest common prefix is attained at a neighbour.
        pos = np.searchsorted(b, a)
        left = b[np.clip(pos - 1, 0, b.size - 1)]
        right = b[np.clip(pos, 0, b.size - 1)]
        best = np.maximum(self.lcp(a, left), self.lcp(a, right))
        dist = np.exp(-best.astype(float))
        exact = (left == a) | (right == a)
        dist[exact] = 0.0
        return dist

    def format_point(self, p: int) -> str:
        d = self.digits([p])[0]
        sep = "" if self.alphabet <= 10 else "."
        return sep.join(str(int(v)) for v in d)


def _is_single_string(x) -> bool:
    if isinstance(x, str):
        return True
    if isinstance(x, (list, tuple, np.ndarray)) and len(x) and np.isscalar(x[0]):
        return True
    return False


@dataclass(frozen=True, eq=False)
class CompactSetApprox:
    """Finite sorted set of point ids; ``full=True`` stands for the whole space lazily."""

    space: MetricSpaceModel
    _ids: np.ndarray | None = field(default=None, repr=False)
    full: bool = False

    @classmethod
    def from_ids(cls, space: MetricSpaceModel, ids: Iterable[int]) -> "CompactSetApprox":
        arr = np.unique(np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64))
        return cls(space, arr)

    @classmethod
    def sorted_unique(cls, space, arr: np.ndarray) -> "CompactSetApprox":
        """Wrap an array already known to be sorted and duplicate free."""
        return cls(space, np.asarray(arr, dtype=np.int64))

    @classmethod
    def empty(cls, space) -> "CompactSetApprox":
        return cls(space, np.zeros(0, dtype=np.int64))

    @classmethod
    def whole(cls, space) -> "CompactSetApprox":
        return cls(space, None, full=True)

    @classmethod
    def from_points(cls, space, points) -> "CompactSetApprox":
        return cls.from_ids(space, space.snap(points))

    @property
    def ids(self) -> np.ndarray:
        if self.full:
            if self._ids is None:
                object.__setattr__(self, "_ids", self.space.all_ids())
            return self._ids
        return self._ids

    def __len__(self) -> int:
        return self.space.size if self.full else int(self._ids.size)

    def __bool__(self) -> bool:
        return len(self) > 0

    def __iter__(self):
        return (int(v) for v in self.ids)

    def __contains__(self, p) -> bool:
        if self.full:
            return 0 <= int(p) < self.space.size
        i = np.searchsorted(self._ids, p)
        return bool(i < self._ids.size and self._ids[i] == p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompactSetApprox):
            return NotImplemented
        if self.space != other.space:
            return False
        if self.full or other.full:
            return len(self) == len(other) == self.space.size
        return np.array_equal(self._ids, other._ids)

    def __hash__(self):
        return hash((self.space, self.full, None if self.full else self._ids.tobytes()))

    def __repr__(self) -> str:
        if self.full:
            return f"CompactSetApprox(full, {self.space.size} points)"
        return f"CompactSetApprox({len(self)} points)"

    def _check(self, other):
        if self.space != other.space:
            raise ValueError("sets live in different spaces")

    def union(self, other) -> "CompactSetApprox":
        self._check(other)
        if self.full or other.full:
            return CompactSetApprox.whole(self.space)
        return CompactSetApprox.sorted_unique(self.space, np.union1d(self._ids, other._ids))

    def intersection(self, other) -> "CompactSetApprox":
        self._check(other)
        if self.full:
            return other
        if other.full:
            return self
        return CompactSetApprox.sorted_unique(
            self.space, np.intersect1d(self._ids, other._ids, assume_unique=True)
        )

    def difference(self, other) -> "CompactSetApprox":
        self._check(other)
        if other.full:
            return CompactSetApprox.empty(self.space)
        return CompactSetApprox.sorted_unique(
            self.space, np.setdiff1d(self.ids, other._ids, assume_unique=True)
        )

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other) -> bool:
        self._check(other)
        if other.full:
            return True
        if self.full:
            return len(other) == self.space.size
        return bool(np.isin(self._ids, other._ids, assume_unique=True).all())

    __le__ = issubset

    def coords(self) -> np.ndarray:
        return self.space.coords(self.ids)

    def smallest(self) -> int:
        if not self:
            raise ValueError("empty set has no smallest point")
        return int(self.ids[0])


def hausdorff(a: CompactSetApprox, b: CompactSetApprox) -> float:
    """Hausdorff-Pompeiu distance between two nonempty sets of the same space."""
    if not a or not b:
        raise EmptySetDistance("Hausdorff distance needs two nonempty sets")
    a._check(b)
    if a == b:
        return 0.0
    space = a.space
    ab = space.min_distances(a.ids, b.ids)
    ba = space.min_distances(b.ids, a.ids)
    return float(max(ab.max(initial=0.0), ba.max(initial=0.0)))


def one_sided(a: CompactSetApprox, b: CompactSetApprox) -> float:
    """``max_{x in a} d(x, b)``."""
    if not a or not b:
        raise EmptySetDistance("one-sided distance needs two nonempty sets")
    return float(a.space.min_distances(a.ids, b.ids).max())


def gap(a: CompactSetApprox, b: CompactSetApprox) -> float:
    """``min_{x in a} d(x, b)``: the infimum distance between two sets."""
    if not a or not b:
        raise EmptySetDistance("gap needs two nonempty sets")
    return float(a.space.min_distances(a.ids, b.ids).min())


def write_csv(points: CompactSetApprox, path) -> None:
    space = points.space
    with open(path, "w", encoding="utf-8") as fh:
        for p in points.ids:
            fh.write(space.format_point(int(p)))
            fh.write("\n")


def read_csv(space: MetricSpaceModel, path) -> CompactSetApprox:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if isinstance(space, SymbolSpace):
                rows.append([int(c) for c in (line.split(".") if "." in line else line)])
            else:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        return CompactSetApprox.empty(space)
    return CompactSetApprox.from_points(space, rows)
