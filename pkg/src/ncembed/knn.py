"""k-nearest-neighbor search: HNSW index plus a brute-force oracle.

The index is the production path; ``exact_knn`` is an O(N^2) reference used
to measure recall and to pin down tie behavior in tests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend
from ._rng import TAG_HNSW_LEVELS, rand_unit_array, stream_key
from .distance import normalize_rows
from .model import DataMatrix

_METRIC_CODE = {"euclidean": 0, "cosine": 1}
_MAX_LEVEL = 32


@dataclass
class KnnResult:
    """Per-point neighbor lists: indices and distances, nearest first."""

    neighbors: np.ndarray  # (N, k) int32
    distances: np.ndarray  # (N, k) float64


@dataclass
class HnswIndex:
    """Layered proximity graph over a fixed point set.

    ``data`` holds the vectors the distance kernel actually sees (unit rows
    for the cosine metric).  Construction is single-threaded and a
    deterministic function of (data, seed); queries are read-only.
    """

    data: np.ndarray
    metric: str
    m_conn: int
    ef_construction: int
    seed: int
    level: np.ndarray     # (N,) int32
    deg0: np.ndarray      # (N,) int32
    adj0: np.ndarray      # (N, 2*m_conn) int32
    deg_upper: np.ndarray  # (B,) int32, one row per (node, layer>=1) block
    adj_upper: np.ndarray  # (B, m_conn) int32
    upper_offset: np.ndarray  # (N+1,) int64
    entry_point: int
    max_level: int

    @property
    def n_points(self) -> int:
        return self.data.shape[0]


def default_ef_search(k: int) -> int:
    return max(2 * k, 100)


def _draw_levels(n: int, m_conn: int, seed: int) -> np.ndarray:
    """Geometric layer assignment with normalization 1/ln(m_conn)."""
    key = stream_key(seed, TAG_HNSW_LEVELS)
    u = rand_unit_array(key, np.arange(n, dtype=np.uint64))
    mult = 1.0 / math.log(m_conn)
    lv = np.floor(-np.log(u) * mult).astype(np.int32)
    return np.minimum(lv, _MAX_LEVEL)


def _prepare(data: DataMatrix, metric: str) -> np.ndarray:
    if metric == "cosine":
        return normalize_rows(data.values)
    return data.values


def build_hnsw(data: DataMatrix, metric: str = "euclidean", m_conn: int = 16,
               ef_construction: int = 200, seed: int = 0) -> HnswIndex:
    if metric not in _METRIC_CODE:
        raise ValueError(f"unknown metric {metric!r}")
    if m_conn < 2:
        raise ValueError("m_conn must be >= 2")
    prepared = _prepare(data, metric)
    n = prepared.shape[0]
    level = _draw_levels(n, m_conn, seed)
    upper_offset = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(level, out=upper_offset[1:])
    n_blocks = int(upper_offset[-1])
    deg0 = np.zeros(n, dtype=np.int32)
    adj0 = np.zeros((n, 2 * m_conn), dtype=np.int32)
    deg_upper = np.zeros(n_blocks, dtype=np.int32)
    adj_upper = np.zeros((n_blocks, m_conn), dtype=np.int32)

    impl = backend.active()
    entry, max_level = impl.hnsw_build(
        prepared, _METRIC_CODE[metric], m_conn, ef_construction,
        level, deg0, adj0, deg_upper, adj_upper, upper_offset,
    )
    return HnswIndex(
        data=prepared, metric=metric, m_conn=m_conn,
        ef_construction=ef_construction, seed=seed,
        level=level, deg0=deg0, adj0=adj0,
        deg_upper=deg_upper, adj_upper=adj_upper, upper_offset=upper_offset,
        entry_point=int(entry), max_level=int(max_level),
    )


def query_knn(index: HnswIndex, data: DataMatrix, k: int,
              ef_search: int | None = None, n_threads: int = 1) -> KnnResult:
    """Approximate k nearest neighbors of every indexed point, self excluded.

    ``data`` must be the matrix the index was built from; rows are queried
    by identity so each point can exclude itself from its own result.
    """
    n = index.n_points
    if data.n_rows != n:
        raise ValueError("data does not match the indexed point set")
    if k >= n:
        raise ValueError(f"k must be < N (got k={k}, N={n})")
    if ef_search is None:
        ef_search = default_ef_search(k)
    out_nb = np.empty((n, k), dtype=np.int32)
    out_d = np.empty((n, k), dtype=np.float64)
    impl = backend.active()

    def run(row0: int, row1: int) -> None:
        impl.hnsw_query_chunk(
            index.data, _METRIC_CODE[index.metric],
            index.level, index.deg0, index.adj0,
            index.deg_upper, index.adj_upper, index.upper_offset,
            index.entry_point, index.max_level,
            k, ef_search, out_nb, out_d, row0, row1,
        )

    if n_threads > 1 and n >= 4 * n_threads:
        bounds = np.linspace(0, n, n_threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            futs = [
                pool.submit(run, int(bounds[w]), int(bounds[w + 1]))
                for w in range(n_threads)
            ]
            for f in futs:
                f.result()
    else:
        run(0, n)

    # rows where the graph search came up short fall back to a direct scan
    short = np.unique(np.nonzero(out_nb < 0)[0])
    for i in short:
        nb, d = _scan_row(index.data, index.metric, int(i), k)
        out_nb[i] = nb
        out_d[i] = d
    return KnnResult(neighbors=out_nb, distances=out_d)


def _scan_row(prepared: np.ndarray, metric: str, i: int, k: int):
    if metric == "euclidean":
        diff = prepared - prepared[i]
        d = np.einsum("ij,ij->i", diff, diff)
    else:
        d = np.maximum(0.0, 1.0 - prepared @ prepared[i])
    d[i] = np.inf
    order = np.argsort(d, kind="stable")[:k]
    return order.astype(np.int32), d[order]


def exact_knn(data: DataMatrix, k: int, metric: str = "euclidean") -> KnnResult:
    """Exact k nearest neighbors by full pairwise scan.

    Ties are broken by lower point index (stable sort on distance), which
    keeps results reproducible on degenerate inputs.  Intended for modest N;
    cost is O(N^2 log N).
    """
    if metric not in _METRIC_CODE:
        raise ValueError(f"unknown metric {metric!r}")
    n = data.n_rows
    if k >= n:
        raise ValueError(f"k must be < N (got k={k}, N={n})")
    x = _prepare(data, metric)
    out_nb = np.empty((n, k), dtype=np.int32)
    out_d = np.empty((n, k), dtype=np.float64)
    block = max(1, min(n, int(2**24 // max(1, n))))
    if metric == "euclidean":
        sq = np.einsum("ij,ij->i", x, x)
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        if metric == "euclidean":
            d = sq[r0:r1, None] + sq[None, :] - 2.0 * (x[r0:r1] @ x.T)
            np.maximum(d, 0.0, out=d)
        else:
            d = 1.0 - x[r0:r1] @ x.T
            np.maximum(d, 0.0, out=d)
        d[np.arange(r0, r1) - r0, np.arange(r0, r1)] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        out_nb[r0:r1] = order
        out_d[r0:r1] = np.take_along_axis(d, order, axis=1)
    return KnnResult(neighbors=out_nb, distances=out_d)


def recall(approx: KnnResult, exact: KnnResult) -> float:
    """Mean fraction of true neighbors recovered per point."""
    n, k = exact.neighbors.shape
    hits = 0
    for i in range(n):
        hits += len(np.intersect1d(approx.neighbors[i], exact.neighbors[i]))
    return hits / (n * k)
