"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
The numba path must be importable (do not set PHENOGP_BACKEND=numpy here;
the script imports both implementations explicitly).
"""

import time

import numpy as np

from phenogp import kernels
from phenogp.evolution import GPConfig, full_tree


def bench(fn, args, n_iter, warmup=3):
    for _ in range(warmup):
        fn(*args)
    start = time.perf_counter()
    for _ in range(n_iter):
        result = fn(*args)
    elapsed = (time.perf_counter() - start) / n_iter
    return result, elapsed


def fmt(seconds):
    return f"{seconds * 1e3:9.3f} ms"


def main():
    if kernels.BACKEND != "numba":
        raise SystemExit(
            "numba backend inactive (PHENOGP_BACKEND forces numpy or numba missing); "
            "nothing to compare"
        )
    rng = np.random.default_rng(0)
    cfg = GPConfig(init_max_depth=8)

    print(f"{'kernel':<34}{'numba':>12}{'numpy':>12}{'speedup':>9}")
    for size_label, depth, n_rows in (("small tree", 6, 72), ("large tree", 10, 72)):
        tree = full_tree(5, depth, cfg, rng)  # 2^(depth+1) - 1 nodes
        x = rng.normal(size=(n_rows, 5))
        n_iter = 200 if depth == 6 else 20

        _, t_nb = bench(kernels.eval_prefix, (tree.kinds, tree.codes, tree.values, x), n_iter)
        _, t_np = bench(kernels.eval_prefix_numpy, (tree.kinds, tree.codes, tree.values, x), n_iter)
        print(f"eval_prefix {size_label} ({len(tree)}x{n_rows})".ljust(34)
              + fmt(t_nb).rjust(12) + fmt(t_np).rjust(12) + f"{t_np / t_nb:8.1f}x")

        sem_nb = kernels.eval_prefix(tree.kinds, tree.codes, tree.values, x)
        _, t_nb = bench(kernels.pairwise_mad, (sem_nb,), max(3, n_iter // 10))
        _, t_np = bench(kernels.pairwise_mad_numpy, (sem_nb,), max(3, n_iter // 10))
        print(f"pairwise_mad {size_label}".ljust(34)
              + fmt(t_nb).rjust(12) + fmt(t_np).rjust(12) + f"{t_np / t_nb:8.1f}x")

        _, t_nb = bench(kernels.subtree_lengths, (tree.kinds,), n_iter * 5)
        _, t_np = bench(kernels.subtree_lengths_numpy, (tree.kinds,), n_iter * 5)
        print(f"subtree_lengths {size_label}".ljust(34)
              + fmt(t_nb).rjust(12) + fmt(t_np).rjust(12) + f"{t_np / t_nb:8.1f}x")

    # greedy pair pass on a dense synthetic pair set
    size = 2000
    lengths = np.ones(size, dtype=np.int64)
    rng_pairs = np.random.default_rng(1)
    tgt = rng_pairs.integers(0, size, size=200_000).astype(np.int64)
    src = rng_pairs.integers(0, size, size=200_000).astype(np.int64)
    _, t_nb = bench(kernels.greedy_replacements, (tgt, src, lengths, size), 20)
    _, t_np = bench(kernels.greedy_replacements_numpy, (tgt, src, lengths, size), 3)
    print("greedy_replacements (200k pairs)".ljust(34)
          + fmt(t_nb).rjust(12) + fmt(t_np).rjust(12) + f"{t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
