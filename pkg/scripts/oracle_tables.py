"""Exhaustive tiny-grid oracle and a jigsaw cross-check at sizes the
reconstruction accepts (n >= 3k).

    python scripts/oracle_tables.py --jigsaw-seeds 20
"""
import argparse
import time

from shotgun_recon.grid import GridShape, generate_deck, random_grid_colouring
from shotgun_recon.grid_recon import reconstruct_verified
from shotgun_recon.harness import exhaustive_grid_oracle, jigsaw_solutions
from shotgun_recon.rainbow import BudgetExceeded


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--jigsaw-seeds", type=int, default=20)
    ap.add_argument("--sizes", default="12:4,15:5")
    args = ap.parse_args()

    for n, k, r in ((3, 2, 2), (4, 2, 2), (4, 3, 2), (4, 4, 2), (3, 2, 3)):
        t0 = time.perf_counter()
        t = exhaustive_grid_oracle(n, k, r)
        print(f"n={n} k={k} r={r}: {len(t.reconstructible)} colourings, "
              f"{int(t.deck_class.max()) + 1} deck classes, reconstructible fraction {t.fraction:.6f} "
              f"({time.perf_counter() - t0:.2f} s)")

    for spec in args.sizes.split(","):
        n, k = (int(x) for x in spec.split(":"))
        out = unique = 0
        t0 = time.perf_counter()
        for s in range(args.jigsaw_seeds):
            col = random_grid_colouring(GridShape(2, n), 2, s)
            deck = generate_deck(col, k, shuffle_seed=s)
            res = reconstruct_verified(deck)
            if not res.ok:
                continue
            out += 1
            try:
                sols = jigsaw_solutions(deck, limit=2)
            except BudgetExceeded:
                continue
            unique += len(sols) == 1 and sols[0] == res.colouring
        print(f"n={n} k={k}: {out}/{args.jigsaw_seeds} outputs, {unique} equal the unique jigsaw solution "
              f"({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
