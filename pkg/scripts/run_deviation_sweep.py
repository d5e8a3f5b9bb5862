#!/usr/bin/env python3
"""Run the deviation sweep and summarize how the discrete ratio tracks the
exact-rectangle and Monte-Carlo ellipse references as n grows.

Writes the full record grid to CSV (same layout as `polarjiou sweep`) and
prints one summary line per n value.
"""

import argparse
import time

from polarjiou.fitting import (
    DEFAULT_N_VALUES,
    SWEEP_MC_SAMPLES,
    deviation_sweep,
    write_sweep_csv,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="sweep.csv", help="output CSV path")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--mc-samples", type=int, default=SWEEP_MC_SAMPLES,
                        dest="mc_samples",
                        help="Monte-Carlo samples per (ar, dphi) cell")
    args = parser.parse_args()

    t0 = time.perf_counter()
    records = deviation_sweep(mc_samples=args.mc_samples, seed=args.seed)
    elapsed = time.perf_counter() - t0
    write_sweep_csv(records, args.out)

    print(f"{len(records)} records in {elapsed:.1f}s -> {args.out}")
    print(f"{'n':>6} {'max|dev_rect|':>14} {'max|dev_ellipse|':>17}")
    for n in DEFAULT_N_VALUES:
        rows = [r for r in records if r.n == n]
        rect = max(abs(r.dev_rect) for r in rows)
        ell = max(abs(r.dev_ellipse) for r in rows)
        print(f"{n:>6} {rect:>14.6f} {ell:>17.6f}")


if __name__ == "__main__":
    main()
