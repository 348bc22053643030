"""Fraction of G(n, 1/2) colourings passing each predicate of the colour-reconstruction
checker, for a ladder of (c1, c2) settings.

    python scripts/precondition_sweep.py --n 20 --k 16 --seeds 500
"""
import argparse
from collections import Counter

from shotgun_recon.graph_recon import Constants, check_colour_preconditions
from shotgun_recon.graphs import random_coloured_graph

LADDER = [(0.9, 0.2), (0.7, 0.15), (0.5, 0.1), (0.5, 0.05), (0.5, 0.0), (0.0, 0.0)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--k", type=int, default=16)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=500)
    args = ap.parse_args()

    graphs = [random_coloured_graph(args.n, args.r, s) for s in range(args.seeds)]
    for c1, c2 in LADDER:
        consts = Constants(c1=c1, c2=c2)
        counts: Counter = Counter()
        passed = 0
        for g in graphs:
            rep = check_colour_preconditions(g, args.k, consts)
            counts.update(name for name, ok in rep.predicates.items() if ok)
            passed += rep.passed
        fr = ", ".join(f"{name} {counts[name] / len(graphs):.3f}" for name in sorted(counts))
        print(f"c1={c1:.2f} c2={c2:.2f}: all {passed / len(graphs):.3f}; {fr}")


if __name__ == "__main__":
    main()
