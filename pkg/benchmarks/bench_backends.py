"""Compare the compiled extension against the pure-Python fallback.

Usage:
    python benchmarks/bench_backends.py [--n 4000] [--dim 16] [--k 15]
                                        [--epochs 5] [--threads 2]

Times the three hot stages (index build, kNN queries, training epochs) on
both backends and prints the per-stage speedup of the compiled core.  The
backends share one RNG protocol, so whenever they return identical neighbor
sets (typical at benchmark sizes) the single-threaded embeddings agree to
the last bit.
"""

import argparse
import time

import numpy as np

from ncembed import _purepy, backend
from ncembed.graph import EdgeSampler, build_graph
from ncembed.knn import build_hnsw, query_knn
from ncembed.model import DataMatrix, EmbeddingState, Hyperparams
from ncembed.optim import train
from ncembed.spectral import power_iteration_init

try:
    from ncembed import _core
except ImportError:
    _core = None


def bench_backend(impl, data, k, epochs, threads, seed=0):
    backend._impl = impl
    times = {}
    t = time.perf_counter()
    index = build_hnsw(data, seed=seed)
    times["hnsw build"] = time.perf_counter() - t

    t = time.perf_counter()
    knn = query_knn(index, data, k, n_threads=threads)
    times["hnsw query"] = time.perf_counter() - t

    graph = build_graph(knn)
    sampler = EdgeSampler.build(graph)
    state = EmbeddingState(power_iteration_init(graph, 2, seed=seed))
    h = Hyperparams(k=k, n_epochs=epochs, seed=seed, n_threads=1)
    t = time.perf_counter()
    train(state, sampler, graph, h)
    times[f"train x{epochs}"] = time.perf_counter() - t
    return times, state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--k", type=int, default=15)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--threads", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _core is None:
        raise SystemExit("compiled core is not built; nothing to compare")

    rng = np.random.default_rng(args.seed)
    data = DataMatrix(rng.normal(size=(args.n, args.dim)))
    print(f"dataset: {args.n} x {args.dim}, k={args.k}, epochs={args.epochs}")

    saved = backend._impl
    try:
        fast, state_fast = bench_backend(
            _core, data, args.k, args.epochs, args.threads, args.seed
        )
        slow, state_slow = bench_backend(
            _purepy, data, args.k, args.epochs, args.threads, args.seed
        )
    finally:
        backend._impl = saved

    print(f"{'stage':<12} {'compiled':>10} {'pure':>10} {'speedup':>9}")
    for stage in fast:
        ratio = slow[stage] / fast[stage]
        print(f"{stage:<12} {fast[stage]:>9.3f}s {slow[stage]:>9.3f}s {ratio:>8.1f}x")

    same = np.array_equal(state_fast.coords, state_slow.coords)
    print(f"single-threaded embeddings bitwise identical: {same}")


if __name__ == "__main__":
    main()
