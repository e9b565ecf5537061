"""Scene files: a strict JSON description of a local IFS or a graph-directed IFS.

Numbers may be given as JSON numbers or as arithmetic strings such as
``"sqrt(3)/2"``; strings are kept verbatim so a scene round-trips exactly.
"""
from __future__ import annotations

import ast
import json
import math
import operator
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .ambient import GridSpace, MetricSpaceModel, SymbolSpace
from .errors import LifsError, OpenDomainRejected, SceneError, SchemaError
from .ifs_core import (
    AdjacentSum,
    Affine,
    BinarySequences,
    Branch,
    BoxUnion,
    ConstantPoint,
    ContractionMap,
    DomainSet,
    FinitePoints,
    LocalIFS,
    SymbolPrepend,
    UnionDomain,
    Whole,
)

# --------------------------------------------------------------------------- numbers

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}
_CONSTS = {"pi": math.pi, "e": math.e}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand))
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def number(value, path: str) -> float:
    if isinstance(value, bool):
        raise SchemaError(f"{path}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval(ast.parse(value, mode="eval")))
        except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"{path}: cannot evaluate {value!r}") from exc
    raise SchemaError(f"{path}: expected a number, got {type(value).__name__}")


def integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected an integer")
    return value


def _obj(value, path: str, required: set, optional: set = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{path}: expected an object")
    unknown = set(value) - required - set(optional)
    if unknown:
        raise SchemaError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = required - set(value)
    if missing:
        raise SchemaError(f"{path}: missing key(s) {sorted(missing)}")
    return value


def _list(value, path: str, min_len: int = 0) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected a list")
    if len(value) < min_len:
        raise SchemaError(f"{path}: expected at least {min_len} entries")
    return value


_INTERVAL = re.compile(r"^\s*([\[\(])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\]\)])\s*$")


def interval(value, path: str) -> tuple:
    """``[lo, hi]`` as a two-element list or a closed interval string."""
    if isinstance(value, str):
        m = _INTERVAL.match(value)
        if not m:
            raise SchemaError(f"{path}: cannot read interval {value!r}")
        if m.group(1) != "[" or m.group(4) != "]":
            raise OpenDomainRejected(f"{path}: domain {value!r} is not closed; only closed sets are allowed")
        lo, hi = number(m.group(2), path), number(m.group(3), path)
    else:
        pair = _list(value, path)
        if len(pair) != 2:
            raise SchemaError(f"{path}: an interval has two endpoints")
        lo, hi = number(pair[0], path + "[0]"), number(pair[1], path + "[1]")
    if lo > hi:
        raise SchemaError(f"{path}: reversed interval")
    return lo, hi


# --------------------------------------------------------------------------- builders


def build_space(desc: dict, path: str = "space", cell: Optional[float] = None,
                length: Optional[int] = None) -> MetricSpaceModel:
    kind = desc.get("kind") if isinstance(desc, dict) else None
    if kind == "grid":
        _obj(desc, path, {"kind", "bounds", "cell"})
        bounds = [interval(b, f"{path}.bounds[{i}]") for i, b in enumerate(_list(desc["bounds"], path + ".bounds", 1))]
        h = cell if cell is not None else number(desc["cell"], path + ".cell")
        if h <= 0:
            raise SchemaError(f"{path}.cell: must be positive")
        if any(lo >= hi for lo, hi in bounds):
            raise SchemaError(f"{path}.bounds: every axis needs lo < hi")
        return GridSpace(tuple(bounds), h)
    if kind == "symbols":
        _obj(desc, path, {"kind", "alphabet", "length"})
        A = integer(desc["alphabet"], path + ".alphabet")
        L = length if length is not None else integer(desc["length"], path + ".length")
        if A < 2 or L < 4:
            raise SchemaError(f"{path}: need alphabet >= 2 and length >= 4")
        return SymbolSpace(A, L)
    if kind == "enriched":
        from .graph_directed import EnrichedSpace

        _obj(desc, path, {"kind", "base", "vertices"})
        base = build_space(desc["base"], path + ".base", cell, length)
        return EnrichedSpace(base, integer(desc["vertices"], path + ".vertices"))
    raise SchemaError(f"{path}.kind: expected 'grid', 'symbols' or 'enriched'")


def _point(value, space, path: str):
    if isinstance(value, str):
        return value
    return [number(v, f"{path}[{i}]") for i, v in enumerate(_list(value, path, 1))]


def build_map(desc: dict, path: str, space, lip_value=None, named: bool = True) -> ContractionMap:
    kind = desc.get("kind") if isinstance(desc, dict) else None
    base_keys = {"kind"} | ({"name", "lip"} if named else set())
    lip = number(desc["lip"], path + ".lip") if named else lip_value
    if lip is not None and not 0 <= lip:
        raise SchemaError(f"{path}.lip: must be nonnegative")
    if kind == "affine":
        _obj(desc, path, base_keys | {"matrix", "offset"})
        rows = _list(desc["matrix"], path + ".matrix", 1)
        matrix = [[number(v, f"{path}.matrix[{i}][{j}]") for j, v in enumerate(_list(r, f"{path}.matrix[{i}]"))]
                  for i, r in enumerate(rows)]
        offset = [number(v, f"{path}.offset[{i}]") for i, v in enumerate(_list(desc["offset"], path + ".offset"))]
        if any(len(r) != len(matrix) for r in matrix) or len(offset) != len(matrix):
            raise SchemaError(f"{path}: matrix must be square and match the offset")
        return Affine(matrix, offset, lip)
    if kind == "constant":
        _obj(desc, path, base_keys | {"value"})
        return ConstantPoint(tuple(_point(desc["value"], space, path + ".value")), lip)
    if kind == "symbol_prepend":
        _obj(desc, path, base_keys | {"symbol"})
        return SymbolPrepend(integer(desc["symbol"], path + ".symbol"), lip)
    if kind == "adjacent_sum":
        _obj(desc, path, base_keys)
        return AdjacentSum(lip)
    if kind == "lift":
        from .graph_directed import VertexLift

        _obj(desc, path, base_keys | {"vertex", "base"})
        inner = build_map(desc["base"], path + ".base", space.base, lip, named=False)
        return VertexLift(inner, integer(desc["vertex"], path + ".vertex"), lip)
    raise SchemaError(f"{path}.kind: unknown map kind {kind!r}")


def build_domain(desc, path: str, space) -> DomainSet:
    if isinstance(desc, str):
        return BoxUnion(((interval(desc, path),),))
    kind = desc.get("kind") if isinstance(desc, dict) else None
    if kind == "boxes":
        _obj(desc, path, {"kind", "boxes"})
        boxes = []
        for i, box in enumerate(_list(desc["boxes"], path + ".boxes", 1)):
            axes = _list(box, f"{path}.boxes[{i}]", 1)
            boxes.append(tuple(interval(a, f"{path}.boxes[{i}][{j}]") for j, a in enumerate(axes)))
        return BoxUnion(tuple(boxes))
    if kind == "points":
        _obj(desc, path, {"kind", "points"})
        pts = [_point(p, space, f"{path}.points[{i}]") for i, p in enumerate(_list(desc["points"], path + ".points"))]
        return FinitePoints(tuple(p if isinstance(p, str) else tuple(p) for p in pts))
    if kind == "sequences":
        _obj(desc, path, {"kind", "allowed"})
        allowed = tuple(integer(a, f"{path}.allowed[{i}]") for i, a in enumerate(_list(desc["allowed"], path + ".allowed", 1)))
        return BinarySequences(allowed)
    if kind == "union":
        _obj(desc, path, {"kind", "parts"})
        parts = tuple(build_domain(p, f"{path}.parts[{i}]", space) for i, p in enumerate(_list(desc["parts"], path + ".parts", 1)))
        return UnionDomain(parts)
    if kind == "all":
        _obj(desc, path, {"kind"})
        return Whole()
    if kind == "slab":
        from .graph_directed import VertexSlab

        _obj(desc, path, {"kind", "vertex", "base"})
        return VertexSlab(build_domain(desc["base"], path + ".base", space.base), integer(desc["vertex"], path + ".vertex"))
    raise SchemaError(f"{path}.kind: unknown domain kind {kind!r}")


# --------------------------------------------------------------------------- scene files


@dataclass
class SceneFile:
    space: dict
    maps: list
    domains: list
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"meta": self.meta, "space": self.space, "maps": self.maps, "domains": self.domains}


@dataclass
class GraphSceneFile:
    space: dict
    vertices: list
    vertex_sets: dict
    edges: list
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"meta": self.meta, "space": self.space, "vertices": self.vertices,
                "vertexSets": self.vertex_sets, "edges": self.edges}


def resolve_path(path) -> Path:
    """Existing path, or a file of the same name in the bundled gallery."""
    p = Path(path)
    if p.exists():
        return p
    gallery = resources.files("lifs") / "gallery" / p.name
    if gallery.is_file():
        return Path(str(gallery))
    raise SchemaError(f"scene file {path} not found")


def load_json(path) -> dict:
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{p}: top level must be an object")
    return data


def _meta(data: dict) -> dict:
    meta = data.get("meta", {})
    _obj(meta, "meta", set(), {"title", "notes"})
    for key, value in meta.items():
        if not isinstance(value, str):
            raise SchemaError(f"meta.{key}: expected a string")
    return meta


def scene_from_dict(data: dict):
    if "edges" in data or "vertices" in data:
        _obj(data, "scene", {"space", "vertices", "vertexSets", "edges"}, {"meta"})
        return GraphSceneFile(data["space"], _list(data["vertices"], "vertices", 1), data["vertexSets"],
                              _list(data["edges"], "edges", 1), _meta(data))
    _obj(data, "scene", {"space", "maps", "domains"}, {"meta"})
    maps = _list(data["maps"], "maps", 2)
    domains = _list(data["domains"], "domains", 2)
    if len(maps) != len(domains):
        raise SchemaError(f"scene: {len(maps)} maps but {len(domains)} domains")
    return SceneFile(data["space"], maps, domains, _meta(data))


def parse_scene(path):
    return scene_from_dict(load_json(path))


def emit(scene) -> str:
    return json.dumps(scene.as_dict(), indent=2) + "\n"


def _check_images(ifs: LocalIFS) -> None:
    for br in ifs.branches:
        ids = br.domain.cached_members(ifs.space)
        try:
            if ids.size:
                br.map.apply(ifs.space, ids)
        except LifsError as exc:
            raise SceneError(f"branch {br.label}: image leaves the space ({exc})") from exc


def validate(scene: SceneFile, cell: Optional[float] = None, length: Optional[int] = None,
             check_lipschitz: bool = True) -> LocalIFS:
    if not isinstance(scene, SceneFile):
        raise SchemaError("expected a local IFS scene")
    space = build_space(scene.space, "space", cell, length)
    branches = []
    names = []
    for i, (m, d) in enumerate(zip(scene.maps, scene.domains)):
        if not isinstance(m, dict) or not isinstance(m.get("name"), str):
            raise SchemaError(f"maps[{i}].name: expected a string")
        names.append(m["name"])
        fmap = build_map(m, f"maps[{i}]", space)
        branches.append(Branch(build_domain(d, f"domains[{i}]", space), fmap, m["name"]))
    if len(set(names)) != len(names):
        raise SchemaError("maps: names must be unique")
    ifs = LocalIFS(space, branches, scene.meta.get("title", ""))
    _check_images(ifs)
    if check_lipschitz:
        ifs.validate_lipschitz()
    return ifs


def validate_graph(scene: GraphSceneFile, cell: Optional[float] = None, length: Optional[int] = None):
    from .graph_directed import DirectedGraph, Edge, GraphDirectedIFS

    if not isinstance(scene, GraphSceneFile):
        raise SchemaError("expected a graph-directed scene")
    space = build_space(scene.space, "space", cell, length)
    vertices = []
    for i, v in enumerate(scene.vertices):
        if not isinstance(v, str):
            raise SchemaError(f"vertices[{i}]: expected a string")
        vertices.append(v)
    _obj(scene.vertex_sets, "vertexSets", set(vertices))
    sets = {v: build_domain(scene.vertex_sets[v], f"vertexSets.{v}", space) for v in vertices}
    edges, maps = [], {}
    for i, e in enumerate(scene.edges):
        path = f"edges[{i}]"
        _obj(e, path, {"label", "from", "to", "map", "lip"})
        if e["from"] not in vertices or e["to"] not in vertices:
            raise SchemaError(f"{path}: unknown vertex")
        label = str(e["label"])
        if label in maps:
            raise SchemaError(f"{path}.label: duplicate edge label")
        lip = number(e["lip"], path + ".lip")
        maps[label] = build_map(e["map"], path + ".map", space, lip, named=False)
        edges.append(Edge(label, e["from"], e["to"]))
    gd = GraphDirectedIFS(space, DirectedGraph(tuple(vertices), tuple(edges)), sets, maps,
                          scene.meta.get("title", ""))
    for label, fmap in maps.items():
        true = fmap.true_lip(space)
        if true is not None and true > fmap.lip + 1e-12:
            from .errors import LipschitzMismatch

            raise LipschitzMismatch(f"edge {label}: declared lip {fmap.lip} below {true:.6g}")
    gd.validate()
    return gd


def load_ifs(path, cell: Optional[float] = None, length: Optional[int] = None) -> LocalIFS:
    return validate(parse_scene(path), cell, length)


def load_graph(path, cell: Optional[float] = None, length: Optional[int] = None):
    return validate_graph(parse_scene(path), cell, length)


def enriched_scene(scene: GraphSceneFile) -> SceneFile:
    """Local-IFS scene on ``X x V`` realizing a graph-directed scene."""
    index = {v: i for i, v in enumerate(scene.vertices)}
    maps, domains = [], []
    for e in scene.edges:
        maps.append({"name": str(e["label"]), "kind": "lift", "vertex": index[e["from"]],
                     "base": e["map"], "lip": e["lip"]})
        domains.append({"kind": "slab", "vertex": index[e["to"]], "base": scene.vertex_sets[e["to"]]})
    meta = dict(scene.meta)
    meta["notes"] = (meta.get("notes", "") + " Enriched realization on X x V.").strip()
    space = {"kind": "enriched", "base": scene.space, "vertices": len(scene.vertices)}
    return SceneFile(space, maps, domains, meta)
