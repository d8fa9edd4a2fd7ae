"""Compare the numba and numpy kernel paths on Monte Carlo workloads.

    python benchmarks/bench_kernels.py [--samples 32768] [--repeat 3]
"""

import argparse
import time

import numpy as np

from exstat import kernels
from exstat.volume import sphere_samples


def _bench(fn, repeat):
    fn()  # warm-up / JIT
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1 << 15)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'workload':34s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    cases = [("boson", 2, 2), ("boson", 3, 4), ("boson", 4, 6), ("fermion", 2, 2), ("fermion", 3, 4), ("fermion", 4, 8)]
    for stat, N, two_j in cases:
        z = sphere_samples(rng, (args.samples, N))
        if stat == "fermion":
            def run(nb, z=z, two_j=two_j):
                return kernels.fermion_liouville_batch(z, two_j, use_numba=nb)[1]
        else:
            blocks = kernels.scaled_gram_blocks(z, two_j)[:4]

            def run(nb, blocks=blocks):
                return kernels.liouville_batch(*blocks, False, use_numba=nb)[1]

        t_nb = _bench(lambda: run(True), args.repeat)
        t_np = _bench(lambda: run(False), args.repeat)
        a, b = run(True), run(False)
        diff = np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
        print(f"{stat + f' N={N} 2j={two_j} liouville':34s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {diff:13.2e}")

    for n in (8, 12, 14):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        t_nb = _bench(lambda: kernels.permanent(A, use_numba=True), args.repeat)
        t_np = _bench(lambda: kernels.permanent(A, use_numba=False), args.repeat)
        a, b = kernels.permanent(A, True), kernels.permanent(A, False)
        print(f"{f'permanent n={n}':34s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {abs(a - b) / abs(b):13.2e}")


if __name__ == "__main__":
    main()
