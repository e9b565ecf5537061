"""Command line entry point: ``lifs <subcommand> SCENE [flags]``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .ambient import CompactSetApprox, hausdorff, write_csv
from .code_space import enumerate_codespace, verify_holder, verify_semiconjugacy
from .errors import LifsError
from .essential import convergence_report, essential_part
from .graph_directed import equivalence_check
from .ifs_core import attractor, attractor_tolerance, basin_classify, hutchinson
from .orbit_dynamics import classify_orbits, sample_itineraries, survivor_sets
from .render import render_attractor, write_pgm
from .scene import emit, enriched_scene, parse_scene, validate, validate_graph

SCENE_SUITES = ("convergence", "semiconjugacy", "holder", "invariance")


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Resolves --csv/--json/--render names against the --out directory."""

    def __init__(self, args, stem: str):
        self.dir = Path(args.out) if getattr(args, "out", None) else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.stem = stem

    def path(self, flag: str, ext: str) -> Optional[Path]:
        given = getattr(self.args, flag, None)
        if given:
            p = Path(given)
            return self.dir / p if self.dir and not p.is_absolute() else p
        if self.dir:
            return self.dir / f"{self.stem}.{ext}"
        return None

    def json(self, obj) -> None:
        text = dumps(obj)
        p = self.path("json", "json")
        if p:
            p.write_text(text, encoding="utf-8")
        sys.stdout.write(text)

    def csv(self, points: CompactSetApprox) -> None:
        p = self.path("csv", "csv")
        if p:
            write_csv(points, p)

    def render(self, ifs, A: CompactSetApprox, required: bool = False) -> None:
        p = self.path("render", "pgm") if (required or getattr(self.args, "render", None)) else None
        if p:
            W = survivor_sets(ifs).final
            write_pgm(p, render_attractor(ifs.space, A & W, A - W))


def _load(args):
    return validate(parse_scene(args.scene), args.resolution, args.truncation)


def _load_graph(args):
    return validate_graph(parse_scene(args.scene), args.resolution, args.truncation)


def _stem(args) -> str:
    return Path(args.scene).name.rsplit(".", 1)[0] if getattr(args, "scene", None) else "suite"


# --------------------------------------------------------------------------- subcommands


def cmd_attractor(args) -> int:
    ifs = _load(args)
    k = args.depth
    A = attractor(ifs, k)
    out = Outputs(args, _stem(args))
    out.csv(A)
    out.render(ifs, A)
    out.json({"title": ifs.title, "depth": k, "cells": len(A), "lambda": ifs.lam, "diam": ifs.diam,
              "tolerance": attractor_tolerance(ifs, k), "snapError": ifs.snap_err})
    return 0


def cmd_render(args) -> int:
    ifs = _load(args)
    A = attractor(ifs, args.depth)
    out = Outputs(args, _stem(args))
    if out.path("render", "pgm") is None:
        args.render = f"{_stem(args)}.pgm"
    out.render(ifs, A, required=True)
    return 0


def cmd_codespace(args) -> int:
    ifs = _load(args)
    tree = enumerate_codespace(ifs, args.depth)
    out = Outputs(args, _stem(args))
    payload = tree.as_dict()
    payload["counts"] = tree.counts()
    p = out.path("json", "json")
    if p:
        p.write_text(dumps(payload), encoding="utf-8")
    sys.stdout.write(dumps({"depth": tree.depth, "counts": tree.counts()}))
    return 0


def cmd_orbits(args) -> int:
    ifs = _load(args)
    A = attractor(ifs, args.depth)
    S = survivor_sets(ifs, args.lookahead)
    core, ends = A & S.final, A - S.final
    gap = None
    if ends and core:
        from .ambient import gap as _gap, one_sided

        gap = {"inf": _gap(ends, core), "sup": one_sided(ends, core)}
    tree = enumerate_codespace(ifs, min(args.depth, 8))
    its = sample_itineraries(ifs, tree, 200, seed=0)
    out = Outputs(args, _stem(args))
    out.csv(ends)
    out.render(ifs, A)
    out.json({"depth": args.depth, "survivors": S.as_dict(), "aInfCells": len(core), "endpointCells": len(ends),
              "endpoints": [ifs.space.format_point(int(p)) for p in ends.ids[:1000]],
              "endpointGap": gap, "orbitTypes": dict(sorted(classify_orbits(ifs, its).items()))})
    return 0


def cmd_essential(args) -> int:
    ifs = _load(args)
    X = ifs.whole()
    rep = convergence_report(ifs, X, args.depth, args.lookahead)
    out = Outputs(args, _stem(args))
    out.csv(essential_part(ifs, X, args.depth, args.lookahead if args.lookahead is not None else args.depth).value)
    payload = rep.as_dict()
    payload["ok"] = rep.ok
    out.json(payload)
    return 0 if rep.ok else 1


def _parse_set(ifs, text: str, k: int) -> CompactSetApprox:
    acc = CompactSetApprox.empty(ifs.space)
    for tok in (t.strip() for t in text.split(";")):
        if not tok:
            continue
        if tok == "X":
            acc = acc | ifs.whole()
        elif tok == "A":
            acc = acc | attractor(ifs, k)
        elif ifs.space.__class__.__name__ == "SymbolSpace":
            acc = acc | ifs.set_of([tok])
        else:
            acc = acc | ifs.set_of([[float(v) for v in tok.split(",")]])
    return acc


def cmd_basins(args) -> int:
    ifs = _load(args)
    k = args.depth
    ref = attractor(ifs, k)
    sets = args.set or ["X"]
    reports = []
    for text in sets:
        A0 = _parse_set(ifs, text, k)
        r = basin_classify(ifs, A0, k, args.tolerance, reference=ref)
        reports.append(dict(r.as_dict(), set=text))
    Outputs(args, _stem(args)).json({"depth": k, "reports": reports})
    return 0


def cmd_gd2local(args) -> int:
    scene = parse_scene(args.scene)
    validate_graph(scene, args.resolution, args.truncation)
    text = emit(enriched_scene(scene))
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{_stem(args)}.local.scene").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_gdcheck(args) -> int:
    gd = _load_graph(args)
    rep = equivalence_check(gd, args.depth, args.tolerance)
    Outputs(args, _stem(args)).json({"depth": rep.depth, "tolerance": rep.tolerance, "distances": rep.distances,
                                     "setEquationResiduals": rep.set_equation_residuals,
                                     "failures": rep.failures, "ok": rep.ok})
    return 0 if rep.ok else 1


def scene_checks(ifs, suites, depth: int) -> list:
    """``(name, ok, detail)`` for each requested per-scene check."""
    results = []
    tree = None
    if {"semiconjugacy", "holder"} & set(suites):
        tree = enumerate_codespace(ifs, depth)
    for name in suites:
        if name == "convergence":
            rep = convergence_report(ifs, ifs.whole(), depth)
            worst = max(p.dist_ess / p.bound for p in rep.series)
            results.append((name, rep.ok, f"max distEss/bound = {worst:.3g}"))
        elif name == "semiconjugacy":
            rep = verify_semiconjugacy(ifs, tree, samples=100)
            results.append((name, rep.ok, f"{rep.checked} pairs, max deviation {rep.max_violation:.3g} <= {rep.tolerance:.3g}"))
        elif name == "holder":
            rep = verify_holder(ifs, tree, samples=100)
            results.append((name, rep.ok, f"{rep.checked} pairs, max ratio {rep.max_ratio:.3g}"))
        elif name == "invariance":
            k = max(depth, 12)
            A = attractor(ifs, k)
            d = hausdorff(hutchinson(ifs, A), A)
            bound = ifs.lam**k * ifs.diam * (1 + ifs.lam) + 2 * ifs.snap_err
            results.append((name, d <= bound, f"dist(F(A), A) = {d:.3g} <= {bound:.3g}"))
    return results


def cmd_verify(args) -> int:
    suite = args.suite
    if args.scene is None:
        if suite not in ("all", "acceptance"):
            raise SystemExit(f"lifs verify: suite {suite!r} needs a scene")
        from .acceptance import run_all

        results = run_all()
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else 1
    ifs = _load(args)
    suites = SCENE_SUITES if suite == "all" else (suite,)
    if any(s not in SCENE_SUITES for s in suites):
        raise SystemExit(f"lifs verify: unknown suite {suite!r}")
    ok = True
    for name, passed, detail in scene_checks(ifs, suites, args.depth):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifs", description="Local iterated function systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, depth=None, scene=True, graph=False):
        p = sub.add_parser(name, help=help_text)
        if scene:
            p.add_argument("scene", nargs=None if scene is True else "?",
                           help="graph scene file" if graph else "scene file")
        p.add_argument("--depth", type=int, default=depth, required=depth is None)
        p.add_argument("--resolution", type=float, help="override the grid cell size")
        p.add_argument("--truncation", type=int, help="override the symbol string length")
        p.add_argument("--out", help="output directory")
        p.add_argument("--json", help="JSON report file")
        p.set_defaults(func=func)
        return p

    p = add("attractor", cmd_attractor, "depth-k iterate of the local operator from X")
    p.add_argument("--csv")
    p.add_argument("--render", help="PGM image file")
    p = add("render", cmd_render, "PGM image of the attractor with endpoints in grey")
    p.add_argument("--render", help="PGM image file")
    add("codespace", cmd_codespace, "admissible words up to the given depth")
    p = add("orbits", cmd_orbits, "infinite-orbit core, endpoints and orbit types")
    p.add_argument("--lookahead", type=int, help="number of survivor levels (default: until stable)")
    p.add_argument("--csv")
    p.add_argument("--render", help="PGM image file")
    p = add("essential", cmd_essential, "essential part and convergence rate")
    p.add_argument("--lookahead", type=int, help="left-extension length m (default m = k)")
    p.add_argument("--csv")
    p = add("basins", cmd_basins, "basin classification of initial sets")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--set", action="append",
                   help="';'-separated points, 'X' for the space or 'A' for the attractor; repeatable")
    add("gd2local", cmd_gd2local, "emit the enriched local-IFS scene of a graph scene", depth=0, graph=True)
    p = add("gdcheck", cmd_gdcheck, "compare the enriched and direct graph-directed attractors", graph=True)
    p.add_argument("--tolerance", type=float)
    p = add("verify", cmd_verify, "run per-scene checks or the acceptance suite", depth=8, scene="optional")
    p.add_argument("--suite", default="all",
                   help="all, acceptance, or one of " + ", ".join(SCENE_SUITES))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LifsError as exc:
        print(f"lifs: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise
    except (ValueError, TypeError) as exc:
        print(f"lifs: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
