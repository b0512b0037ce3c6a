"""Stochastic training loop: epochs of per-sample contrastive ascent.

Workers partition each epoch's sample budget and update the shared
coordinate array and normalizer without locks.  Every sample touches only
two of N points, so conflicting writes are rare and the occasional lost
update is absorbed by the stochastic optimization; the normalizer is hit by
every sample but its per-update increment is tiny.  An epoch barrier keeps
the learning-rate schedule globally consistent, and parameters are checked
for finiteness at every boundary.

Single-threaded runs are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import backend
from ._rng import TAG_TRAIN, stream_key
from .graph import EdgeSampler, NeighborGraph
from .model import EmbeddingState, Hyperparams, validate_hyperparams

ProgressFn = Callable[[int, float, float], None]


@dataclass
class TrainReport:
    epochs_run: int
    samples_processed: int
    final_q: float
    wall_time: float
    objective_trace: list[float] = field(default_factory=list)


def lr_schedule(epoch: int, n_epochs: int, lr0: float) -> float:
    """Linear decay from lr0 to lr0/n_epochs; never reaches zero."""
    if epoch >= n_epochs:
        raise ValueError("epoch must be < n_epochs")
    return lr0 * (1.0 - epoch / n_epochs)


def clip(g: float, c: float) -> float:
    return min(max(g, -c), c)


def _partition(total: int, workers: int) -> list[int]:
    base = total // workers
    extra = total % workers
    return [base + (1 if w < extra else 0) for w in range(workers)]


def train(state: EmbeddingState, sampler: EdgeSampler, graph: NeighborGraph,
          h: Hyperparams, progress: Optional[ProgressFn] = None) -> TrainReport:
    """Run the epoch loop of contrastive gradient ascent on ``state``.

    The caller must not read ``state`` until this returns.  Raises
    RuntimeError if any parameter goes non-finite at an epoch boundary.
    """
    n = graph.n_points
    validate_hyperparams(h, n)
    coords = state.coords
    if coords.shape[0] != n:
        raise ValueError("embedding and graph disagree on N")
    qbox = np.array([state.q], dtype=np.float64)
    n_samples = h.samples_per_epoch(n)
    log_nupn = np.log(h.nu * graph.row_sum / (n - 1))
    impl = backend.active()
    table = sampler.data_alias

    workers = min(h.n_threads, n_samples)
    trace: list[float] = []
    started = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for epoch in range(h.n_epochs):
            lr = lr_schedule(epoch, h.n_epochs, h.lr0)
            if workers == 1:
                jsum = impl.train_chunk(
                    coords, qbox, graph.edge_src, graph.edge_dst,
                    table.prob, table.alias, log_nupn,
                    h.a, h.b, h.nu, lr, h.grad_clip,
                    n_samples, stream_key(h.seed, TAG_TRAIN, epoch, 0),
                )
            else:
                futs = [
                    pool.submit(
                        impl.train_chunk,
                        coords, qbox, graph.edge_src, graph.edge_dst,
                        table.prob, table.alias, log_nupn,
                        h.a, h.b, h.nu, lr, h.grad_clip,
                        cnt, stream_key(h.seed, TAG_TRAIN, epoch, w),
                        True,
                    )
                    for w, cnt in enumerate(_partition(n_samples, workers))
                ]
                jsum = sum(f.result() for f in futs)
            if not (np.isfinite(coords).all() and math.isfinite(qbox[0])):
                raise RuntimeError(
                    f"non-finite parameters after epoch {epoch}; "
                    "check lr0 and grad_clip"
                )
            trace.append(jsum / n_samples)
            if progress is not None:
                progress(epoch, lr, trace[-1])
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    state.q = float(qbox[0])
    return TrainReport(
        epochs_run=h.n_epochs,
        samples_processed=h.n_epochs * n_samples,
        final_q=state.q,
        wall_time=time.perf_counter() - started,
        objective_trace=trace,
    )
