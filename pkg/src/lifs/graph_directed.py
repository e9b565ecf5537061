"""Graph-directed systems and their realization as a local IFS on ``X x V``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .ambient import CompactSetApprox, GridSpace, MetricSpaceModel, hausdorff
from .errors import NonContractive, SchemaError
from .ifs_core import Branch, ContractionMap, DomainSet, LocalIFS, attractor


@dataclass(frozen=True)
class Edge:
    label: str
    source: str  # i(e)
    target: str  # t(e)


@dataclass(frozen=True)
class DirectedGraph:
    vertices: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        if not self.edges:
            raise ValueError("graph needs at least one edge")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex label")
        for e in self.edges:
            if e.source not in self.vertices or e.target not in self.vertices:
                raise ValueError(f"edge {e.label} references an unknown vertex")

    def index(self, v: str) -> int:
        return self.vertices.index(v)


@dataclass(frozen=True, eq=False)
class GraphDirectedIFS:
    """Edge map ``f_e`` sends ``X_{t(e)}`` into ``X_{i(e)}``."""

    space: MetricSpaceModel
    graph: DirectedGraph
    vertex_sets: dict  # vertex -> DomainSet
    edge_maps: dict  # edge label -> ContractionMap
    title: str = ""

    def __post_init__(self):
        for v in self.graph.vertices:
            if v not in self.vertex_sets:
                raise ValueError(f"vertex {v} has no set")
        for e in self.graph.edges:
            if e.label not in self.edge_maps:
                raise ValueError(f"edge {e.label} has no map")

    @property
    def lam(self) -> float:
        return max(m.lip for m in self.edge_maps.values())

    def vertex_set(self, v: str) -> CompactSetApprox:
        return self.vertex_sets[v].restrict(self.space, CompactSetApprox.whole(self.space))

    def apply_edge(self, e: Edge, B: CompactSetApprox) -> CompactSetApprox:
        if not B:
            return CompactSetApprox.empty(self.space)
        return CompactSetApprox.from_ids(self.space, self.edge_maps[e.label].apply(self.space, B.ids))

    def validate(self) -> None:
        """Typing check ``f_e(X_{t(e)}) in X_{i(e)}`` on the grid."""
        for e in self.graph.edges:
            image = self.apply_edge(e, self.vertex_set(e.target))
            if not image.issubset(self.vertex_set(e.source)):
                raise SchemaError(f"edge {e.label}: f_e(X_{e.target}) is not inside X_{e.source}")

    def operator(self, B: dict) -> dict:
        """``(B_v) -> (U_{i(e)=u} f_e(B_{t(e)}))_u``."""
        out = {}
        for u in self.graph.vertices:
            acc = CompactSetApprox.empty(self.space)
            for e in self.graph.edges:
                if e.source == u:
                    acc = acc | self.apply_edge(e, B[e.target])
            out[u] = acc
        return out


def gd_attractor_direct(gd: GraphDirectedIFS, k: int, history: bool = False):
    """Depth-k iterate of the graph operator from ``(X_v)``; empty vertices are listed."""
    if gd.lam >= 1:
        raise NonContractive("graph-directed maps must be contractions")
    B = {v: gd.vertex_set(v) for v in gd.graph.vertices}
    trail = [B]
    for _ in range(k):
        B = gd.operator(B)
        trail.append(B)
    return trail if history else B


def unreachable_vertices(result: dict) -> list:
    return [v for v, S in result.items() if not S]


@dataclass(frozen=True)
class EnrichedSpace(MetricSpaceModel):
    """``Y = X x V`` with ``d((x,v),(y,w)) = d(x,y) + [v != w]``; id = v * |X| + x."""

    base: MetricSpaceModel
    vertex_count: int

    @property
    def size(self) -> int:
        return self.base.size * self.vertex_count

    @property
    def diameter(self) -> float:
        return self.base.diameter + (1.0 if self.vertex_count > 1 else 0.0)

    def snap_error(self) -> float:
        return self.base.snap_error()

    def split(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        return ids % self.base.size, ids // self.base.size

    def join(self, base_ids, vertex) -> np.ndarray:
        return np.asarray(vertex, dtype=np.int64) * self.base.size + np.asarray(base_ids, dtype=np.int64)

    def coords(self, ids) -> np.ndarray:
        b, v = self.split(ids)
        return np.column_stack([self.base.coords(b), v])

    def snap(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.join(self.base.snap(pts[:, :-1]), pts[:, -1].astype(np.int64))

    def snap_point(self, point) -> int:
        return int(self.snap([point])[0])

    def distance(self, p: int, q: int) -> float:
        (bp, bq), (vp, vq) = self.split([p, q])
        return self.base.distance(int(bp), int(bq)) + float(vp != vq)

    def min_distances(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        ab, av = self.split(a)
        bb, bv = self.split(b)
        best = np.full(a.size, np.inf)
        for v in range(self.vertex_count):
            target = bb[bv == v]
            if not target.size:
                continue
            d = self.base.min_distances(ab, np.sort(target))
            best = np.minimum(best, d + (av != v))
        return best

    def format_point(self, p: int) -> str:
        b, v = self.split([p])
        return f"{self.base.format_point(int(b[0]))},{int(v[0])}"


@dataclass(frozen=True)
class VertexLift(ContractionMap):
    """``g_e(x, v) = (f_e(x), i(e))``."""

    base_map: ContractionMap
    vertex: int
    lip: float

    @property
    def total(self) -> bool:
        return self.base_map.total

    def apply(self, space, ids):
        b, _ = space.split(ids)
        return space.join(self.base_map.apply(space.base, b), np.full(len(b), self.vertex))

    def true_lip(self, space):
        return self.base_map.true_lip(space.base)


@dataclass(frozen=True)
class VertexSlab(DomainSet):
    """``D_e = X_{t(e)} x {t(e)}``."""

    base_domain: DomainSet
    vertex: int

    def members(self, space):
        base = self.base_domain.cached_members(space.base)
        return space.join(base, np.full(base.size, self.vertex))

    def mask(self, space, ids):
        b, v = space.split(ids)
        return (v == self.vertex) & self.base_domain.mask(space.base, b)


def enrich(gd: GraphDirectedIFS) -> LocalIFS:
    """One branch per edge: domain ``X_{t(e)} x {t(e)}``, map ``g_e``."""
    g = gd.graph
    Y = EnrichedSpace(gd.space, len(g.vertices))
    branches = []
    for e in g.edges:
        fmap = gd.edge_maps[e.label]
        branches.append(Branch(VertexSlab(gd.vertex_sets[e.target], g.index(e.target)),
                               VertexLift(fmap, g.index(e.source), fmap.lip), e.label))
    return LocalIFS(Y, branches, gd.title)


def lift(gd: GraphDirectedIFS, B: dict) -> CompactSetApprox:
    """Vertex-indexed family to a subset of Y."""
    Y = EnrichedSpace(gd.space, len(gd.graph.vertices))
    parts = [Y.join(B[v].ids, np.full(len(B[v]), i)) for i, v in enumerate(gd.graph.vertices)]
    return CompactSetApprox.from_ids(Y, np.concatenate(parts))


def slice_set(B: CompactSetApprox, vertices) -> dict:
    """``B_v = pi_1(B & (X x {v}))``."""
    Y = B.space
    b, v = Y.split(B.ids)
    return {name: CompactSetApprox.from_ids(Y.base, b[v == i]) for i, name in enumerate(vertices)}


@dataclass
class EquivalenceReport:
    depth: int
    tolerance: float
    distances: dict  # vertex -> hausdorff or None when both empty
    set_equation_residuals: dict
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def _dist(a: CompactSetApprox, b: CompactSetApprox) -> Optional[float]:
    if not a and not b:
        return 0.0
    if not a or not b:
        return math.inf
    return hausdorff(a, b)


def equivalence_check(gd: GraphDirectedIFS, k: int, tol: Optional[float] = None) -> EquivalenceReport:
    gd.validate()
    local = enrich(gd)
    tol = tol if tol is not None else gd.lam**k * 2 + 2 * local.snap_err
    slices = slice_set(attractor(local, k), gd.graph.vertices)
    direct = gd_attractor_direct(gd, k)
    dists = {v: _dist(slices[v], direct[v]) for v in gd.graph.vertices}
    image = gd.operator(slices)
    residual = {v: _dist(image[v], slices[v]) for v in gd.graph.vertices}
    failures = [v for v in gd.graph.vertices if dists[v] > tol or residual[v] > tol]
    return EquivalenceReport(k, tol, dists, residual, failures)
