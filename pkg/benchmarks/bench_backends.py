"""Benchmark the compiled kernel-sum core against the numpy fallback.

Times the weighted Gaussian double sum (the hot loop of every MMD /
inner-product-matrix evaluation) on representative shapes, plus one full
aggregation pipeline per backend, and checks that the backends agree.

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from mposterior._accel import active_backend, available_backends, get_impl, use_backend
from mposterior.harness import MPosteriorConfig, m_posterior
from mposterior.kernels import GaussianKernel
from mposterior.measures import make_empirical


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_weighted_sum():
    rng = np.random.default_rng(0)
    shapes = [(100, 100, 1), (1000, 1000, 1), (1000, 1000, 2),
              (1000, 1000, 10), (500, 500, 100)]
    names = available_backends()
    print(f"{'n x m x p':>18} | " + " | ".join(f"{n:>12}" for n in names) + " | speedup")
    print("-" * (24 + 16 * len(names)))
    for n, m, p in shapes:
        u = rng.standard_normal((n, p))
        v = rng.standard_normal((m, p))
        b = np.full(n, 1.0 / n)
        g = np.full(m, 1.0 / m)
        times = {name: time_call(get_impl(name), u, b, v, g) for name in names}
        values = {name: get_impl(name)(u, b, v, g) for name in names}
        if len(names) == 2:
            assert abs(values["compiled"] - values["python"]) < 1e-10, values
            speed = f"{times['python'] / times['compiled']:6.2f}x"
        else:
            speed = "-"
        cells = " | ".join(f"{times[name] * 1e3:10.2f}ms" for name in names)
        print(f"{n:>6} x{m:>5} x{p:>3} | {cells} | {speed}")


def bench_pipeline():
    rng = np.random.default_rng(1)
    measures = [make_empirical(rng.standard_normal((200, 2)) + rng.standard_normal(2))
                for _ in range(10)]
    config = MPosteriorConfig(kernel=GaussianKernel(1.0))
    print("\nfull aggregation (10 subsets x 200 atoms in R^2):")
    previous = active_backend()
    try:
        for name in available_backends():
            use_backend(name)
            t = time_call(m_posterior, measures, config)
            print(f"  {name:>8}: {t * 1e3:8.2f} ms")
    finally:
        use_backend(previous)


if __name__ == "__main__":
    bench_weighted_sum()
    bench_pipeline()
