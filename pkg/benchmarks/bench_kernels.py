"""Compare the compiled and numpy kernel backends on the classical force sum.

    python3 benchmarks/bench_kernels.py [--trajectories 10000] [--harmonics 8191]
"""

import argparse
import time

import numpy as np

from otoclab import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trajectories", type=int, default=10000)
    ap.add_argument("--harmonics", type=int, default=8191)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 2 * np.pi, args.trajectories)
    K = rng.normal(size=args.harmonics) * np.exp(-0.01 * np.arange(args.harmonics))
    f = np.exp(1j * rng.uniform(0, 2 * np.pi, 1 << 16)) * rng.uniform(0, 1, 1 << 16)

    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'backend':<10}{'seconds':>10}{'speedup':>10}")
    cases = [
        ("harmonic_force", lambda b: kernels.harmonic_force(theta, K, num_threads=args.threads, backend=b)),
        ("cosine_moments", lambda b: kernels.cosine_moments(theta, args.harmonics, num_threads=args.threads, backend=b)),
        ("nonlinear_kick", lambda b: kernels.nonlinear_kick(f, 2.5, backend=b)),
    ]
    for name, fn in cases:
        tp, ref = best_of(lambda: fn("python"), args.repeat)
        print(f"{name:<18}{'python':<10}{tp:>10.4f}{1.0:>10.1f}")
        if kernels.BACKEND == "cython":
            tc, out = best_of(lambda: fn("cython"), args.repeat)
            a = np.concatenate([np.ravel(x) for x in (out if isinstance(out, tuple) else (out,))])
            b = np.concatenate([np.ravel(x) for x in (ref if isinstance(ref, tuple) else (ref,))])
            err = np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
            print(f"{name:<18}{'cython':<10}{tc:>10.4f}{tp / tc:>10.1f}   max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
