"""Distance of the essential part of F^k(X) to the attractor, per depth k."""
import argparse

from lifs import load_ifs
from lifs.essential import convergence_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scene", nargs="?", default="cantor_basins.scene")
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--resolution", type=float, default=None)
    args = ap.parse_args()
    ifs = load_ifs(args.scene, cell=args.resolution)
    rep = convergence_report(ifs, ifs.whole(), args.depth)
    print(f"lambda={rep.lam:.4g} diam={rep.diam:.4g} slack={rep.slack:.3g}")
    print(f"{'k':>3} {'distEss':>10} {'bound':>10} {'ratio':>7} {'cells':>7} {'pruned':>7}")
    prev = None
    for p in rep.series:
        ratio = f"{p.dist_ess / prev:.3f}" if prev else "-"
        print(f"{p.k:>3} {p.dist_ess:>10.3e} {p.bound:>10.3e} {ratio:>7} {p.ess_cells:>7} {p.pruned_words:>7}")
        prev = p.dist_ess or None
    print("ok" if rep.ok else "bound violated")


if __name__ == "__main__":
    main()
