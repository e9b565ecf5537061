"""Cylinders, admissible words and the code map.

A word is a tuple of 1-based branch indices ``(b_-k, ..., b_-1)``; the
rightmost symbol is applied last, so ``w + (j,)`` appends j as the most recent symbol.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .ambient import CompactSetApprox
from .errors import BudgetExceeded, InadmissibleWord
from .ifs_core import LocalIFS, apply_branch

Word = tuple

DEFAULT_BUDGET = 1 << 24


def check_word(ifs: LocalIFS, w: Iterable[int]) -> Word:
    w = tuple(int(s) for s in w)
    if not w:
        raise ValueError("words have length at least one")
    for s in w:
        if not 1 <= s <= ifs.n:
            raise ValueError(f"symbol {s} outside 1..{ifs.n}")
    return w


def cylinder(ifs: LocalIFS, w: Iterable[int], start: Optional[CompactSetApprox] = None) -> CompactSetApprox:
    """``V_w``: fold ``S -> f_j(S & X_j)`` over the word, starting from X."""
    w = check_word(ifs, w)
    S = ifs.whole() if start is None else start
    for j in w:
        S = apply_branch(ifs, j, S)
        if not S:
            break
    return S


@dataclass
class CodeLevel:
    """Admissible words of one length with their cylinders stored back to back."""

    words: np.ndarray  # (W, d) 1-based symbols, lexicographically sorted
    starts: np.ndarray  # (W + 1,) offsets into ids
    ids: np.ndarray  # cylinder members, sorted within each word

    def __len__(self) -> int:
        return len(self.words)

    def cells(self) -> np.ndarray:
        return np.diff(self.starts)

    def representatives(self) -> np.ndarray:
        return self.ids[self.starts[:-1]]


@dataclass
class CodeTree:
    ifs: LocalIFS
    depth: int
    levels: list = field(default_factory=list)
    _index: dict = field(default_factory=dict, repr=False)

    def index(self, d: int) -> dict:
        if d not in self._index:
            self._index[d] = {tuple(int(s) for s in w): i for i, w in enumerate(self.levels[d - 1].words)}
        return self._index[d]

    def words(self, d: Optional[int] = None) -> list:
        d = self.depth if d is None else d
        return [tuple(int(s) for s in w) for w in self.levels[d - 1].words]

    def cyl(self, w: Word) -> CompactSetApprox:
        w = tuple(w)
        level = self.levels[len(w) - 1]
        i = self.index(len(w))[w]
        return CompactSetApprox.sorted_unique(self.ifs.space, level.ids[level.starts[i]:level.starts[i + 1]])

    def representative(self, w: Word) -> int:
        w = tuple(w)
        level = self.levels[len(w) - 1]
        return int(level.ids[level.starts[self.index(len(w))[w]]])

    def __contains__(self, w) -> bool:
        w = tuple(w)
        return 1 <= len(w) <= self.depth and w in self.index(len(w))

    def counts(self) -> list[int]:
        return [len(level) for level in self.levels]

    def as_dict(self) -> dict:
        nodes = []
        space = self.ifs.space
        labels = self.ifs.labels
        for level in self.levels:
            for w, cells, rep in zip(level.words, level.cells(), level.representatives()):
                nodes.append({
                    "word": [labels[s - 1] for s in w],
                    "cells": int(cells),
                    "representative": space.format_point(int(rep)),
                })
        return {"depth": self.depth, "nodes": nodes}


def _step(ifs: LocalIFS, owner: Optional[np.ndarray], ids: Optional[np.ndarray],
          start: Optional[CompactSetApprox] = None):
    """Apply every branch to the pairs (word, point); returns sorted unique (key, image).

    ``ids=None`` stands for the single empty word paired with ``start``.
    """
    keys, images = [], []
    space = ifs.space
    for j in range(1, ifs.n + 1):
        if ids is None:
            src = ifs.domain(j).restrict(space, start).ids
            src_owner = np.zeros(src.size, dtype=np.int64)
        else:
            m = ifs.domain(j).mask(space, ids)
            src, src_owner = ids[m], owner[m]
        if not src.size:
            continue
        keys.append(src_owner * ifs.n + (j - 1))
        images.append(ifs.map(j).apply(space, src))
    if not keys:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    key = np.concatenate(keys)
    img = np.concatenate(images)
    order = np.lexsort((img, key))
    key, img = key[order], img[order]
    keep = np.ones(key.size, dtype=bool)
    keep[1:] = (key[1:] != key[:-1]) | (img[1:] != img[:-1])
    return key[keep], img[keep]


def enumerate_codespace(ifs: LocalIFS, k: int, budget: int = DEFAULT_BUDGET,
                        start: Optional[CompactSetApprox] = None) -> CodeTree:
    """All words of length <= k with nonempty cylinder.

    Cylinders fold from ``start`` (default: the whole space).

    Built by right-append, since ``V_{w*j} = f_j(V_w & X_j)`` and every
    prefix of an admissible word is admissible.  All words of one length are
    advanced together as flat (word, point) arrays.
    """
    start = ifs.whole() if start is None else start
    if k < 1:
        raise ValueError("depth must be at least 1")
    if ifs.n**k > budget:
        raise BudgetExceeded(f"{ifs.n}^{k} words exceed the budget {budget}")
    tree = CodeTree(ifs, k)
    words = np.zeros((1, 0), dtype=np.int16)
    owner = ids = None
    for _ in range(k):
        key, ids = _step(ifs, owner, ids, start)
        if not key.size:
            tree.levels.append(CodeLevel(words[:0, :0].reshape(0, words.shape[1] + 1),
                                         np.zeros(1, dtype=np.int64), ids))
            words = tree.levels[-1].words
            owner = np.zeros(0, dtype=np.int64)
            continue
        uniq, first = np.unique(key, return_index=True)
        parent, sym = uniq // ifs.n, uniq % ifs.n + 1
        words = np.concatenate([words[parent], sym[:, None].astype(np.int16)], axis=1)
        starts = np.append(first, key.size).astype(np.int64)
        tree.levels.append(CodeLevel(words, starts, ids))
        owner = np.repeat(np.arange(uniq.size, dtype=np.int64), np.diff(starts))
    return tree


@dataclass
class CodePoint:
    point: int
    radius: float


def code_map(ifs: LocalIFS, w: Iterable[int], tree: Optional[CodeTree] = None) -> CodePoint:
    w = check_word(ifs, w)
    radius = ifs.lam ** len(w) * ifs.diam
    if tree is not None and w in tree:
        return CodePoint(tree.representative(w), radius)
    V = cylinder(ifs, w)
    if not V:
        raise InadmissibleWord(f"word {w} has empty cylinder")
    return CodePoint(V.smallest(), radius)


def address(ifs: LocalIFS, x: int) -> frozenset:
    """``Psi(x)``: branches whose domain contains x."""
    return frozenset(j for j in range(1, ifs.n + 1) if ifs.domain(j).contains(ifs.space, x))


def restricted_shift_domain(ifs: LocalIFS, j: int, tree: CodeTree, d: Optional[int] = None) -> set:
    """Depth-d words whose code point lies in ``X_j``."""
    return {w for w in tree.words(d) if j in address(ifs, code_map(ifs, w, tree).point)}


@dataclass
class SemiconjugacyReport:
    checked: int
    max_violation: float
    tolerance: float
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_semiconjugacy(ifs: LocalIFS, tree: CodeTree, samples: Optional[int] = None,
                         seed: int = 0) -> SemiconjugacyReport:
    """Check ``pi(w*j)`` against ``f_j(pi(w))`` for every ``j in Psi(pi(w))``."""
    k = tree.depth
    tol = 2 * ifs.lam**k * ifs.diam + 2 * ifs.snap_err
    pairs = []
    for w in tree.words(k):
        x = code_map(ifs, w, tree).point
        pairs.extend((w, j, x) for j in sorted(address(ifs, x)))
    if samples is not None and samples < len(pairs):
        rng = np.random.default_rng(seed)
        pairs = [pairs[i] for i in sorted(rng.choice(len(pairs), samples, replace=False))]
    worst = 0.0
    failures = []
    space = ifs.space
    for w, j, x in pairs:
        V = apply_branch(ifs, j, tree.cyl(w))
        if not V:
            failures.append((w, j, math.inf))
            continue
        fx = int(ifs.map(j).apply(space, np.array([x]))[0])
        d = space.distance(V.smallest(), fx)
        worst = max(worst, d)
        if d > tol:
            failures.append((w, j, d))
    return SemiconjugacyReport(len(pairs), worst, tol, failures)


@dataclass
class HolderReport:
    checked: int
    max_ratio: float
    alpha: float
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def common_suffix(a: Word, b: Word) -> int:
    n = 0
    for x, y in zip(reversed(a), reversed(b)):
        if x != y:
            break
        n += 1
    return n


def holder_bound(ifs: LocalIFS, N: int, k: int) -> float:
    alpha = -math.log(ifs.lam) if ifs.lam > 0 else math.inf
    return ifs.diam * math.exp(-N) ** alpha + 2 * (ifs.lam**k * ifs.diam + ifs.snap_err)


def verify_holder(ifs: LocalIFS, tree: CodeTree, samples: int = 100, seed: int = 0,
                  pairs: Optional[list] = None) -> HolderReport:
    """Sample depth-k word pairs grouped by shared suffix and test the Hoelder bound."""
    k = tree.depth
    words = tree.words(k)
    rng = np.random.default_rng(seed)
    if pairs is None:
        by_suffix = defaultdict(list)
        for w in words:
            for N in range(k + 1):
                by_suffix[w[k - N:]].append(w)
        pairs = []
        for _ in range(samples):
            a = words[rng.integers(len(words))]
            N = int(rng.integers(k + 1))
            group = by_suffix[a[k - N:]]
            pairs.append((a, group[rng.integers(len(group))]))
    alpha = -math.log(ifs.lam) if ifs.lam > 0 else math.inf
    worst = 0.0
    failures = []
    for a, b in pairs:
        N = common_suffix(a, b)
        d = ifs.space.distance(code_map(ifs, a, tree).point, code_map(ifs, b, tree).point)
        bound = holder_bound(ifs, N, min(len(a), len(b)))
        worst = max(worst, d / bound)
        if d > bound:
            failures.append((a, b, d, bound))
    return HolderReport(len(pairs), worst, alpha, failures)


@dataclass
class ShiftReport:
    ok: bool
    terminal: list  # depth k-1 words with no admissible right extension
    missing: list  # prefixes that never occur as suffixes
    verified_depth: int


def shift_invariance_check(tree: CodeTree) -> ShiftReport:
    """Finite-depth proxy for ``sigma(Sigma) = Sigma``.

    Prefixes of depth-k words (drop the rightmost symbol) must all occur as
    suffixes (drop the leftmost symbol); suffixes that never extend to the
    right are reported as terminal, i.e. their code points are endpoints.
    """
    k = tree.depth
    if k < 2:
        raise ValueError("shift check needs depth at least 2")
    top = tree.words(k)
    prefixes = {w[:-1] for w in top}
    suffixes = {w[1:] for w in top}
    missing = sorted(prefixes - suffixes)
    terminal = sorted(suffixes - prefixes)
    return ShiftReport(not missing, terminal, missing, k)


@dataclass
class SFTWitness:
    word: Word
    witness: Word
    agreement: int


@dataclass
class SFTReport:
    symbol: int
    depth: int
    witnesses: list
    max_agreement: int
    open_map_violations: list

    def agreement_of(self, w: Word) -> int:
        for item in self.witnesses:
            if item.word == tuple(w):
                return item.agreement
        return 0


def sft_witness(ifs: LocalIFS, k: int, symbol: int, budget: int = DEFAULT_BUDGET,
                tree: Optional[CodeTree] = None) -> SFTReport:
    """Heuristic search for failures of openness of the shift at finite depth.

    With ``U = [symbol]`` the image ``V = sigma(U)`` consists of the words c
    with ``c * symbol`` admissible.  For every depth-(k-1) c in V the
    longest common suffix with an admissible word outside V is recorded.
    Agreement lengths that keep growing with the depth hint that V is not
    open; nothing here proves the code space is of finite type.
    """
    if tree is None or tree.depth < k:
        tree = enumerate_codespace(ifs, k, budget)
    d = k - 1
    top = set(tree.words(k))
    words = tree.words(d)
    inside = {c for c in words if c + (symbol,) in top}
    outside = [c for c in words if c not in inside]
    outside_by_suffix = {}
    for c in outside:
        for N in range(1, d + 1):
            outside_by_suffix.setdefault(c[d - N:], c)
    witnesses = []
    for c in sorted(inside):
        best = None
        for N in range(d, 0, -1):
            other = outside_by_suffix.get(c[d - N:])
            if other is not None:
                best = SFTWitness(c, other, N)
                break
        if best is not None:
            witnesses.append(best)
    max_agree = max((w.agreement for w in witnesses), default=0)
    violations = [(w.word, w.witness) for w in witnesses if w.agreement == max_agree and max_agree > 0]
    return SFTReport(symbol, d, witnesses, max_agree, violations)


def is_in_shift_image(ifs: LocalIFS, c: Iterable[int], symbol: int) -> bool:
    """``c * symbol`` admissible."""
    return bool(cylinder(ifs, tuple(c) + (symbol,)))
