"""Compare the compiled and pure-Python transport kernels.

    python benchmarks/bench_transport.py [--repeat N]

Times one full four-puncture monodromy representation per backend and
reports the largest entrywise difference between the two results.
"""

import argparse
import time

import numpy as np

from hitchinq import _backend
from hitchinq.ensembles import random_oper4
from hitchinq.monodromy import monodromy_rep


def bench(oper, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = monodromy_rep(oper, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    oper = random_oper4(np.random.default_rng(args.seed))
    backends = [b for b in ("cython", "python") if b in _backend.KERNELS]
    timings, reps = {}, {}
    for b in backends:
        timings[b], reps[b] = bench(oper, b, args.repeat)
        print(f"{b:>7}: {timings[b] * 1e3:9.2f} ms per representation")
    if len(backends) == 2:
        diff = max(float(np.abs(x - y).max())
                   for x, y in zip(reps["cython"].matrices, reps["python"].matrices))
        print(f"speedup {timings['python'] / timings['cython']:.1f}x, max |diff| {diff:.2e}")
    else:
        print("compiled kernel not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
