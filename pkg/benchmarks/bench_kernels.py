"""Time the compiled and pure-Python kernels side by side.

Usage: python3 benchmarks/bench_kernels.py [--walkers N] [--states N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from quasilump import _fallback, kernels
from quasilump import chain_gen as gen

try:
    from quasilump import _kernels
except ImportError:
    _kernels = None


def bench_advance(mod, cum, block_of, walkers, steps, repeat):
    rng = np.random.default_rng(0)
    u = rng.random((steps, walkers))

    def run():
        states = np.zeros(walkers, dtype=np.int64)
        counts = np.zeros(int(block_of.max()) + 1, dtype=np.int64)
        for row in u:
            mod.advance_walkers(states, cum, row, block_of, counts)

    return min(timeit.repeat(run, number=1, repeat=repeat)) / steps


def bench_ergodic(mod, M, repeat):
    return min(timeit.repeat(lambda: mod.ergodic_coefficient(M), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--walkers", type=int, default=100_000)
    ap.add_argument("--states", type=int, default=100)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = gen.make_rng(1)
    P = gen.random_stochastic_matrix(args.states, rng)
    cum = kernels.cumulative_rows(P)
    block_of = (np.arange(args.states) % 2).astype(np.int64)
    backends = [("python", _fallback)] + ([("compiled", _kernels)] if _kernels else [])
    if _kernels is None:
        print("compiled kernels not built; timing the python backend only")

    print(f"{'kernel':<20}{'backend':<10}{'seconds':>12}")
    results = {}
    for name, mod in backends:
        per_step = bench_advance(mod, cum, block_of, args.walkers, args.steps, args.repeat)
        results[("advance", name)] = per_step
        print(f"{'advance_walkers':<20}{name:<10}{per_step:>12.5f}")
    for size in (50, 200, 400):
        M = gen.random_stochastic_matrix(size, rng)
        for name, mod in backends:
            t = bench_ergodic(mod, M, args.repeat)
            results[(f"ergodic{size}", name)] = t
            print(f"{f'ergodic n={size}':<20}{name:<10}{t:>12.5f}")
    if _kernels is not None:
        print()
        for key in sorted({k for k, _ in results}):
            speedup = results[(key, "python")] / results[(key, "compiled")]
            print(f"speedup {key}: {speedup:.1f}x")


if __name__ == "__main__":
    main()
