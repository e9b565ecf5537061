"""Render every grid scene in the gallery to PGM, endpoints grey and the core black."""
import argparse
from pathlib import Path

from lifs import LifsError, load_ifs
from lifs.ambient import GridSpace
from lifs.ifs_core import attractor
from lifs.orbit_dynamics import survivor_sets
from lifs.render import render_attractor, write_pgm

GALLERY = Path(__file__).resolve().parents[1] / "src" / "lifs" / "gallery"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("renders"))
    ap.add_argument("--depth", type=int, default=15)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for path in sorted(GALLERY.glob("*.scene")):
        try:
            ifs = load_ifs(path)
        except LifsError as exc:  # graph scenes have no local form here
            print(f"skip {path.name}: {exc}")
            continue
        if not isinstance(ifs.space, GridSpace):
            print(f"skip {path.name}: not a grid")
            continue
        A = attractor(ifs, args.depth)
        W = survivor_sets(ifs).final
        target = args.out / f"{path.stem}.pgm"
        write_pgm(target, render_attractor(ifs.space, A & W, A - W))
        print(f"{target}: {len(A)} cells, {len(A - W)} endpoint cells")


if __name__ == "__main__":
    main()
