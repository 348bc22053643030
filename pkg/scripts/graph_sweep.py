"""Algorithms A and B across k at fixed n, with the precondition pass rate.

    python scripts/graph_sweep.py --n 16 --trials 10 --c1 0.5 --c2 0.1
"""
import argparse
import json

from shotgun_recon.graph_recon import Constants
from shotgun_recon.harness import TrialConfig, run_graph_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--kgap", type=int, default=4, help="k runs over n-kgap .. n-1")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--c1", type=float, default=0.9)
    ap.add_argument("--c2", type=float, default=0.2)
    ap.add_argument("--algorithms", default="A,B")
    args = ap.parse_args()

    consts = Constants(c1=args.c1, c2=args.c2)
    for algo in args.algorithms.split(","):
        mode = "graph-colour" if algo == "A" else "graph-uncoloured"
        for k in range(args.n - args.kgap, args.n):
            rep = run_graph_trials(TrialConfig(mode=mode, algorithm=algo, n=args.n, k=k, trials=args.trials,
                                               seed=args.seed, constants=consts))
            stages: dict = {}
            for r in rep.records:
                stages[r.stage or "ok"] = stages.get(r.stage or "ok", 0) + 1
            pre = sum(bool(r.precondition) for r in rep.records)
            print(json.dumps({"algorithm": algo, "n": args.n, "k": k, "success": rep.successes,
                              "trials": len(rep.records), "precondition_pass": pre,
                              "false_positives": rep.false_positives, "stages": stages}))


if __name__ == "__main__":
    main()
