"""Time the compiled kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Compilation happens in a warm-up call and is excluded from the timings.
Each kernel's two outputs are also checked for exact agreement.
"""

import argparse
import time

import numpy as np

from unbiased_market._kernels import numba_impl, numpy_impl


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def cases(rng):
    n = 1000
    costs = np.where(np.arange(n) < n // 2, 10.0, 0.0)
    coefs = rng.uniform(0.2, 2.0, n)
    t = 111
    qs, xs, ys = rng.uniform(0, 1, t), rng.uniform(0, 20, t), rng.uniform(0, 5, t)
    uniforms = rng.random((2000, 200))
    samples = numpy_impl.srs_batch(n, uniforms)
    values = rng.random(n)
    return {
        "choice_codes (1000 sellers x 111 questions)": (costs, coefs, qs, xs, ys, 1.0),
        "b_thresholds (1000 sellers, tol 1e-9)": (costs, coefs, 0.2, 10.0, 1.0, 0.0, 2.0, 1e-9),
        "srs_batch (2000 draws of 200 from 1000)": (n, uniforms),
        "row_sums (2000 x 200)": (samples, values),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<46}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}  agree")
    for label, inputs in cases(rng).items():
        name = label.split()[0]
        fast, slow = getattr(numba_impl, name), getattr(numpy_impl, name)
        fast(*inputs)  # compile
        t_np, out_np = best_of(slow, inputs, args.repeat)
        t_nb, out_nb = best_of(fast, inputs, args.repeat)
        agree = np.array_equal(out_np, out_nb)
        print(f"{label:<46}{t_np * 1e3:>10.2f}{t_nb * 1e3:>10.2f}{t_np / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
