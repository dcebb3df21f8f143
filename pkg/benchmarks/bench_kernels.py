"""Compare the compiled and pure-Python step-propagation kernels.

Usage::

    python benchmarks/bench_kernels.py [--steps 65536] [--repeat 5]

Reports the best-of-``repeat`` wall time per kernel, the speedup, and the
largest difference between the two trajectories.
"""
import argparse
import time

import numpy as np

from berrycross import kernels


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=65536)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    gens = np.ascontiguousarray(rng.normal(scale=0.05, size=(args.steps, 4)))
    up, dn = 0.6 + 0j, 0.8j

    t_py, ref = best_time(lambda: kernels.python_propagate(gens, up, dn), args.repeat)
    print(f"steps            {args.steps}")
    print(f"python kernel    {t_py * 1e3:10.2f} ms  ({t_py / args.steps * 1e9:7.1f} ns/step)")
    if kernels.compiled_propagate is None:
        print("compiled kernel  not built (run `pip install -e . --no-build-isolation`)")
        return
    t_c, out = best_time(lambda: kernels.compiled_propagate(gens, up, dn), args.repeat)
    print(f"compiled kernel  {t_c * 1e3:10.2f} ms  ({t_c / args.steps * 1e9:7.1f} ns/step)")
    print(f"speedup          {t_py / t_c:10.1f}x")
    print(f"max |difference| {np.abs(out - ref).max():10.2e}")


if __name__ == "__main__":
    main()
