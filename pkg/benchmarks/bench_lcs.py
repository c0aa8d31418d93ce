"""Compare the numba and pure-numpy LCS kernels.

    python3 benchmarks/bench_lcs.py --sizes 1000 4000 8000 --repeat 3
"""
import argparse
import time

import numpy as np

from scripteval import _accel
from scripteval.kernels import lcs_numba, lcs_numpy


def best_of(fn, a, b, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000, 8000])
    ap.add_argument("--vocab", type=int, default=2000, help="distinct token ids, roughly a CJK word vocabulary")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")
    rng = np.random.default_rng(args.seed)
    lcs_numba(np.arange(3, dtype=np.int64), np.arange(3, dtype=np.int64))  # compile outside the timings

    print("| tokens (gen x ref) | numba s | numpy s | speedup | lcs |")
    print("|---|---|---|---|---|")
    for n in args.sizes:
        a = rng.integers(0, args.vocab, n, dtype=np.int64)
        b = rng.integers(0, args.vocab, n, dtype=np.int64)
        t_nb, l_nb = best_of(lcs_numba, a, b, args.repeat)
        # numpy path loops in python over the shorter side
        t_np, l_np = best_of(lcs_numpy, a, b, args.repeat)
        if l_nb != l_np:
            raise SystemExit(f"kernels disagree at n={n}: {l_nb} vs {l_np}")
        print(f"| {n} x {n} | {t_nb:.4f} | {t_np:.4f} | {t_np / t_nb:.1f}x | {l_nb} |")


if __name__ == "__main__":
    main()
