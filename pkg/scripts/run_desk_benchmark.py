"""Recognition rate vs. occlusion fraction on the synthetic desk benchmark.

Example:
    python scripts/run_desk_benchmark.py --fractions 0.1 0.3 0.5 --seeds 0 1 2
"""
import argparse
import csv
import sys
import time

import numpy as np

from quatreg.cli import parse_config_text, run_experiment

GRID = "0.01, 0.1, 1, 10"


def config_text(solver, fraction, seed, args):
    text = (f"solver = {solver}\nsynth_classes = {args.classes}\nsynth_per_class = {args.per_class}\n"
            f"synth_size = {args.size}\nblock_fraction = {fraction}\nsp_probability = {args.sp}\n"
            f"gaussian_variance = {args.var}\nseed = {seed}\nthreads = {args.threads}\n")
    if solver == "rnqmr":
        text += f"omega = {GRID}\nalpha = {GRID}\nbeta = {GRID}\n"
    else:
        text += f"lambda = {GRID}\n"
    return text


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--fractions", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=4)
    p.add_argument("--size", default="8x8")
    p.add_argument("--sp", type=float, default=0.1)
    p.add_argument("--var", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=4)
    p.add_argument("--csv", help="also write the table here")
    args = p.parse_args(argv)

    rows = []
    for frac in args.fractions:
        for solver in ("nqmr", "rnqmr"):
            t0 = time.perf_counter()
            rates = [run_experiment(parse_config_text(config_text(solver, frac, s, args))).rate
                     for s in args.seeds]
            rows.append((frac, solver, float(np.mean(rates)), float(np.min(rates)), time.perf_counter() - t0))
            print(f"occlusion {frac:.0%} {solver:6s} mean {rows[-1][2]:.3f} min {rows[-1][3]:.3f} "
                  f"({rows[-1][4]:.1f}s)", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["blockFraction", "solver", "meanRate", "minRate", "seconds"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
