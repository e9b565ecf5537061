"""Invariance, outer-basin and attraction flags for a few starting sets."""
import argparse

import numpy as np

from lifs import CompactSetApprox, basin_classify, load_ifs
from lifs.ifs_core import attractor


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scene", nargs="?", default="cantor_basins.scene")
    ap.add_argument("--depth", type=int, default=20)
    ap.add_argument("--set", action="append", dest="sets", metavar="POINTS",
                    help="';'-separated points, repeatable")
    args = ap.parse_args()
    ifs = load_ifs(args.scene)
    space = ifs.space
    A = attractor(ifs, args.depth)
    named = {"X": ifs.whole(), "A": A}
    for text in args.sets or ["3", "0;2", "2;3"]:
        pts = [[float(c) for c in p.split(",")] for p in text.split(";")]
        named[text] = CompactSetApprox.from_ids(space, np.unique(space.snap(pts)))
    named["A+{2,3}"] = A | CompactSetApprox.from_ids(space, np.unique(space.snap([[2.0], [3.0]])))
    print(f"{'set':>12} {'inv':>5} {'out':>5} {'attracted':>9}")
    for name, S in named.items():
        r = basin_classify(ifs, S, args.depth, reference=A)
        print(f"{name:>12} {r.inv!s:>5} {r.out!s:>5} {r.attracted!s:>9}")


if __name__ == "__main__":
    main()
