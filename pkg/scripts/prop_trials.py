"""Seeded random trials of the two indistinguishability characterizations.

Usage: python3 scripts/prop_trials.py [--trials N] [--seeds 0 1 2]
"""
import argparse
import time

from statel.catalog import run_prop_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--mutant", choices=["complement"], default=None)
    args = ap.parse_args()

    print(f"{'seed':>5} {'which':>6} {'trials':>7} {'checks':>7} {'disagree':>9} {'secs':>6}")
    total = 0
    for seed in args.seeds:
        t0 = time.perf_counter()
        r1, r2 = run_prop_trials(args.trials, seed, mutant=args.mutant)
        dt = time.perf_counter() - t0
        for name, r in (("pair", r1), ("data", r2)):
            print(f"{seed:>5} {name:>6} {r.trials:>7} {r.checks:>7} {r.disagreements:>9} {dt:>6.2f}")
            total += r.disagreements
    print(f"total disagreements: {total}")
    return 1 if total else 0


if __name__ == "__main__":
    raise SystemExit(main())
