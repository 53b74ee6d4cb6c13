"""Compare the compiled and pure-Python stack kernels.

    python3 benchmarks/bench_stackcore.py [--requests N] [--modules M] [--keys K]

Both backends run the same workload; their outputs must agree exactly.
"""

import argparse
import random
import sys
import time

from hookcost.kernels import BACKENDS


def workload(n_req, n_mod, n_keys, capacity, seed):
    rng = random.Random(seed)
    allow = [bytes(rng.random() < 0.9 for _ in range(n_keys)) for _ in range(n_mod)]
    # skewed key popularity so the caches see both hits and evictions
    keys = [min(int(rng.paretovariate(1.2)) - 1, n_keys - 1) for _ in range(n_req)]
    return allow, keys, [capacity] * n_mod, [1] * n_mod, [True] * n_mod


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--requests", type=int, default=200_000)
    p.add_argument("--modules", type=int, default=3)
    p.add_argument("--keys", type=int, default=4096)
    p.add_argument("--capacity", type=int, default=512)
    p.add_argument("--passes", type=int, default=2)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    allow, keys, caps, costs, deny = workload(args.requests, args.modules, args.keys,
                                              args.capacity, args.seed)
    results = {}
    for name, kernel in sorted(BACKENDS.items()):
        secs, out = best_of(lambda: kernel(allow, keys, caps, costs, args.passes, deny), args.repeat)
        results[name] = (secs, out)
        checks = args.requests * args.passes
        print(f"{name:<8} {secs * 1e3:9.1f} ms  {checks / secs / 1e6:7.2f} M requests/s")

    if "cython" not in results:
        print("compiled kernel not built; only the fallback was timed", file=sys.stderr)
        return 0
    if results["cython"][1] != results["python"][1]:
        print("backends disagree", file=sys.stderr)
        return 1
    print(f"speedup  {results['python'][0] / results['cython'][0]:9.1f}x  (outputs identical)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
