"""Grid success rate as k crosses the threshold (d log_r n)^(1/d).

    python scripts/threshold_sweep.py --n 256 --kmin 3 --kmax 8 --trials 20 > sweep.csv
"""
import argparse
import sys

from shotgun_recon.bounds import grid_threshold
from shotgun_recon.harness import CSV_COLUMNS, TrialConfig, run_grid_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--kmin", type=int, default=3)
    ap.add_argument("--kmax", type=int, default=8)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", default="grid", choices=("grid", "grid-torus", "grid-unoriented"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    th = grid_threshold(args.d, args.r, args.n)
    print(f"# k_th = {th.k_th:.4f}", file=sys.stderr)
    print(",".join(CSV_COLUMNS))
    for k in range(args.kmin, args.kmax + 1):
        if args.n < 3 * k:
            break
        cfg = TrialConfig(mode=args.mode, d=args.d, n=args.n, k=k, r=args.r, trials=args.trials,
                          seed=args.seed, workers=args.workers, verify=args.mode != "grid-torus")
        rep = run_grid_trials(cfg)
        sys.stdout.write(rep.to_csv().split("\n", 1)[1])
        print(f"# k={k}: success {rep.success_rate:.2f}, ambiguous {rep.ambiguity_rate:.2f}, "
              f"mean {rep.mean_runtime_ms / 1e3:.2f} s", file=sys.stderr)


if __name__ == "__main__":
    main()
