"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--sizes 8,16,32,64]

Also times a full per-draw regularization search end to end under each backend by
re-running it in a subprocess with ``RCI_SECRECY_NO_NUMBA`` set or unset.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from rci_secrecy import _kernels

E2E = """
import time
from rci_secrecy import _kernels
from rci_secrecy.experiments import normalized_loss_trials
normalized_loss_trials({M}, {K}, 10.0, 2, 0)  # warm-up / JIT
t = time.perf_counter()
normalized_loss_trials({M}, {K}, 10.0, {trials}, 0)
print(_kernels.BACKEND, time.perf_counter() - t)
"""


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(sizes, repeat, n_xi=64):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'M=K':>6}{'numpy ms':>12}{'numba ms':>12}{'speedup':>9}{'max diff':>11}")
    for M in sizes:
        H = cn(rng, M, M)
        U, s, Vh = np.linalg.svd(H)
        L = H @ Vh.conj().T
        xis = np.linspace(0.01, 2.0, n_xi)
        args = (np.ascontiguousarray(L), np.ascontiguousarray(U), s, xis, float(M), 10.0)
        G = np.ascontiguousarray(cn(rng, M, M))
        cases = [
            ("sinr_from_gain", (G, 10.0), _kernels._sinr_from_gain_np,
             _kernels._sinr_from_gain_nb),
            ("spectral_sweep", args, _kernels._secrecy_sum_spectral_np,
             _kernels._secrecy_sum_spectral_nb),
        ]
        for name, a, f_np, f_nb in cases:
            f_nb(*a)  # compile outside the timing
            t_np = best_of(lambda: f_np(*a), repeat)
            t_nb = best_of(lambda: f_nb(*a), repeat)
            diff = max(np.max(np.abs(x - y)) for x, y in zip(f_np(*a), f_nb(*a)))
            print(f"{name:<18}{M:>6}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}"
                  f"{t_np / t_nb:>9.1f}{diff:>11.1e}")


def bench_end_to_end(M, trials):
    print(f"\nper-draw xi search, M=K={M}, {trials} draws")
    for flag in ("", "1"):
        env = dict(os.environ, RCI_SECRECY_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E.format(M=M, K=M, trials=trials)],
                             env=env, capture_output=True, text=True, check=True).stdout
        backend, secs = out.split()
        print(f"  {backend:<6} {float(secs):8.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", default="8,16,32,64")
    ap.add_argument("--e2e-M", type=int, default=32)
    ap.add_argument("--e2e-trials", type=int, default=20)
    args = ap.parse_args()
    if _kernels._secrecy_sum_spectral_nb is None:
        sys.exit("numba is not importable; nothing to compare")
    bench_kernels([int(x) for x in args.sizes.split(",")], args.repeat)
    bench_end_to_end(args.e2e_M, args.e2e_trials)


if __name__ == "__main__":
    main()
