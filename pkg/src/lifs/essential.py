"""Essential part of the iterates and the convergence rate towards the attractor."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ambient import CompactSetApprox, hausdorff
from .code_space import DEFAULT_BUDGET, enumerate_codespace
from .ifs_core import LocalIFS, attractor, global_ifs, hutchinson, iterate
from .errors import NonContractive


@dataclass
class EssentialApprox:
    depth: int
    lookahead: int
    words: list  # essential depth-k words
    pruned: list  # admissible from K but without a depth-(k+m) left extension
    value: CompactSetApprox  # union of V_w(K) over essential words
    total: CompactSetApprox  # F^k(K)
    nonessential: CompactSetApprox  # union of V_w(K) over pruned words


def _level_union(space, level, rows: np.ndarray) -> CompactSetApprox:
    if not rows.size:
        return CompactSetApprox.empty(space)
    lo, hi = level.starts[rows], level.starts[rows + 1]
    parts = [level.ids[a:b] for a, b in zip(lo, hi)]
    return CompactSetApprox.from_ids(space, np.concatenate(parts))


def _row_keys(words: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(words).view(np.dtype((np.void, words.dtype.itemsize * words.shape[1]))).ravel()


def essential_part(ifs: LocalIFS, K: CompactSetApprox, k: int, m: int,
                   budget: int = DEFAULT_BUDGET) -> EssentialApprox:
    """Union of ``V_w(K)`` over depth-k words w that extend m symbols to the left.

    A word w has an admissible left extension u of length m exactly when
    ``V_w(F^m(X))`` is nonempty, because ``V_w`` commutes with unions.
    """
    if not ifs.contractive:
        raise NonContractive("essential part needs a contractive system")
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    space = ifs.space
    from_K = enumerate_codespace(ifs, k, budget, start=K).levels[-1]
    past = ifs.whole() if m == 0 else iterate(ifs, ifs.whole(), m)[-1]
    from_past = enumerate_codespace(ifs, k, budget, start=past).levels[-1]
    keep = np.isin(_row_keys(from_K.words), _row_keys(from_past.words))
    rows = np.arange(len(from_K))
    value = _level_union(space, from_K, rows[keep])
    rest = _level_union(space, from_K, rows[~keep])
    as_tuples = [tuple(int(s) for s in w) for w in from_K.words]
    words = [w for w, ok in zip(as_tuples, keep) if ok]
    pruned = [w for w, ok in zip(as_tuples, keep) if not ok]
    return EssentialApprox(k, m, words, pruned, value, value | rest, rest)


def extinction_depths(ifs: LocalIFS, K: CompactSetApprox, k: int, m_max: int) -> dict:
    """For each depth-k word admissible from K: the smallest m at which it stops being essential."""
    base = essential_part(ifs, K, k, 0)
    alive = set(base.words)
    out = {}
    for m in range(1, m_max + 1):
        now = set(essential_part(ifs, K, k, m).words)
        for w in alive - now:
            out[w] = m
        alive = now
    return out


@dataclass
class ConvergencePoint:
    k: int
    dist_ess: float
    bound: float
    ess_cells: int
    total_cells: int
    pruned_words: int

    def as_dict(self) -> dict:
        return {"k": self.k, "distEss": self.dist_ess, "bound": self.bound, "essCells": self.ess_cells,
                "totalCells": self.total_cells, "prunedWords": self.pruned_words}


@dataclass
class ConvergenceReport:
    lam: float
    diam: float
    slack: float
    series: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(p.dist_ess <= p.bound for p in self.series)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "diam": self.diam, "slack": self.slack,
                "series": [p.as_dict() for p in self.series]}


def convergence_report(ifs: LocalIFS, A0: CompactSetApprox, k_max: int, m: Optional[int] = None,
                       k_ref: Optional[int] = None, reference: Optional[CompactSetApprox] = None) -> ConvergenceReport:
    """``dist_H(ess(F^k(A0)), A)`` against ``lam^k diam + 2 (lam^kref diam + snapErr)``.

    The lookahead defaults to m = k.
    """
    k_ref = k_ref if k_ref is not None else max(3 * k_max, 20)
    ref = attractor(ifs, k_ref) if reference is None else reference
    slack = ifs.lam**k_ref * ifs.diam + ifs.snap_err
    report = ConvergenceReport(ifs.lam, ifs.diam, slack)
    for k in range(1, k_max + 1):
        ess = essential_part(ifs, A0, k, k if m is None else m)
        d = hausdorff(ess.value, ref)
        report.series.append(ConvergencePoint(k, d, ifs.lam**k * ifs.diam + 2 * slack, len(ess.value),
                                              len(ess.total), len(ess.pruned)))
    return report


def attractor_from_global(ifs: LocalIFS, k: int, k_global: Optional[int] = None) -> CompactSetApprox:
    """Iterate the restricted operator starting from the global attractor."""
    A_R = attractor(global_ifs(ifs), k_global or k)
    return iterate(ifs, A_R, k)[-1]
