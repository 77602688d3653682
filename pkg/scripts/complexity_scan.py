"""Per-iteration NQMR and R-NQMR wall time against dictionary size and image size."""
import argparse
import time

import numpy as np

from quatreg.nqmr import Dictionary, NqmrConfig, solve_nqmr
from quatreg.quat_core import QuaternionMatrix
from quatreg.rnqmr import RnqmrConfig, solve_rnqmr


def per_iteration(solve, d, b, cfg, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = solve(d, b, cfg)
        best = min(best, (time.perf_counter() - t0) / res.iterations)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--atoms", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    p.add_argument("--sizes", nargs="+", default=["8x8", "16x16", "24x24"])
    p.add_argument("--iters", type=int, default=15)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    pure = np.array([0, 1, 1, 1])[:, None, None]
    print(f"{'size':>7} {'L':>4} {'nqmr ms/it':>11} {'rnqmr ms/it':>12}")
    for size in args.sizes:
        m, n = (int(t) for t in size.split("x"))
        b = QuaternionMatrix(rng.random((4, m, n)) * pure)
        for n_atoms in args.atoms:
            d = Dictionary([QuaternionMatrix(rng.random((4, m, n)) * pure) for _ in range(n_atoms)])
            tn = per_iteration(solve_nqmr, d, b, NqmrConfig(eps_rel=1e-300, max_iter=args.iters), args.repeats)
            tr = per_iteration(solve_rnqmr, d, b, RnqmrConfig(eps_rel=1e-300, max_iter=args.iters), args.repeats)
            print(f"{size:>7} {n_atoms:>4} {tn * 1e3:11.2f} {tr * 1e3:12.2f}", flush=True)


if __name__ == "__main__":
    main()
