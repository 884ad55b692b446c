#!/usr/bin/env python3
"""Benchmark the compiled fold kernels against the pure-Python fallback.

Times mfe folding and the structure-side partition function on random
sequences of several lengths, plus (for context) the sequence-side partition
function and Boltzmann sampling, which are pure Python in both setups.

Usage: python benchmarks/compare_backends.py [--lengths 30 60 120] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from seqsem import SequenceSampler, ensemble_rng, load_params, parse_dot_bracket, partition_function
from seqsem.fold import available_backends
from seqsem.fold._tables import packed_tables


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_fold(params, lengths, repeats):
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; run `pip install -e .` first")
    rng = np.random.default_rng(0)
    rows = []
    for n in lengths:
        codes = rng.integers(0, 4, size=n).astype(np.uint8)
        pk = packed_tables(params, n)
        row = {"n": n}
        for name, eng in backends.items():
            row[f"fold_{name}"] = best_of(lambda: eng.fold(codes, pk), repeats)
            row[f"mccaskill_{name}"] = best_of(lambda: eng.mccaskill(codes, pk, params.rt), repeats)
        rows.append(row)
    return rows


def bench_sequence_side(params, lengths, repeats):
    rows = []
    for n in lengths:
        unit = "(((....)))"
        S = parse_dot_bracket(unit * max(1, n // len(unit)))
        part_t = best_of(lambda: partition_function(params, S), repeats)
        sampler = SequenceSampler(params, S)
        rng = ensemble_rng(1, 0)
        draws = 50
        samp_t = best_of(lambda: [sampler.sample(rng) for _ in range(draws)], repeats) / draws
        rows.append({"n": S.n, "partition": part_t, "per_sample": samp_t})
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lengths", type=int, nargs="+", default=[30, 60, 120, 240])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    params = load_params()
    print(f"fold kernels ({', '.join(available_backends())}), best of {args.repeats}:")
    header = f"{'n':>5} {'fold py (ms)':>14} {'fold c (ms)':>13} {'speedup':>8} " \
             f"{'mcc py (ms)':>13} {'mcc c (ms)':>12} {'speedup':>8}"
    print(header)
    for row in bench_fold(params, args.lengths, args.repeats):
        fold_py = row.get("fold_python", float("nan")) * 1e3
        fold_c = row.get("fold_compiled", float("nan")) * 1e3
        mcc_py = row.get("mccaskill_python", float("nan")) * 1e3
        mcc_c = row.get("mccaskill_compiled", float("nan")) * 1e3
        print(
            f"{row['n']:>5} {fold_py:>14.3f} {fold_c:>13.3f} {fold_py / fold_c:>8.1f} "
            f"{mcc_py:>13.3f} {mcc_c:>12.3f} {mcc_py / mcc_c:>8.1f}"
        )

    print("\nsequence-side (pure Python in both setups):")
    print(f"{'n':>5} {'partition (ms)':>15} {'per sample (us)':>16}")
    for row in bench_sequence_side(params, args.lengths, args.repeats):
        print(f"{row['n']:>5} {row['partition'] * 1e3:>15.3f} {row['per_sample'] * 1e6:>16.1f}")


if __name__ == "__main__":
    main()
