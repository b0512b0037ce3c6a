"""End-to-end pipeline: kNN graph -> edge distributions -> init -> training."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import EdgeSampler, build_graph
from .knn import build_hnsw, query_knn
from .model import DataMatrix, EmbeddingState, Hyperparams, validate_hyperparams
from .optim import ProgressFn, TrainReport, train
from .spectral import power_iteration_init, random_init

STAGES = ("knn", "graph", "init", "train")


@dataclass
class PipelineResult:
    state: EmbeddingState
    report: TrainReport
    timings: dict[str, float]


def run(data: DataMatrix, h: Hyperparams, init: str = "spectral",
        progress: Optional[ProgressFn] = None) -> PipelineResult:
    """Embed ``data`` into ``h.m`` dimensions; returns state plus timings."""
    validate_hyperparams(h, data.n_rows)
    if init not in ("spectral", "random"):
        raise ValueError(f"init must be 'spectral' or 'random', got {init!r}")
    timings: dict[str, float] = {}

    t = time.perf_counter()
    index = build_hnsw(data, metric=h.metric, seed=h.seed)
    knn = query_knn(index, data, h.k, n_threads=h.n_threads)
    timings["knn"] = time.perf_counter() - t

    t = time.perf_counter()
    graph = build_graph(knn)
    sampler = EdgeSampler.build(graph)
    timings["graph"] = time.perf_counter() - t

    t = time.perf_counter()
    if init == "spectral":
        coords = power_iteration_init(graph, h.m, seed=h.seed)
    else:
        coords = random_init(data.n_rows, h.m, h.seed)
    state = EmbeddingState(np.ascontiguousarray(coords), q=0.0)
    timings["init"] = time.perf_counter() - t

    t = time.perf_counter()
    report = train(state, sampler, graph, h, progress=progress)
    timings["train"] = time.perf_counter() - t

    return PipelineResult(state=state, report=report, timings=timings)


def embed(x: np.ndarray, **kwargs) -> np.ndarray:
    """One-call convenience API: embed an (N, M) array, return (N, m)."""
    init = kwargs.pop("init", "spectral")
    h = Hyperparams(**kwargs)
    return run(DataMatrix(x), h, init=init).state.coords
