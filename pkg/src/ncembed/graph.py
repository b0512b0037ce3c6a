"""Edge distributions over the kNN graph.

The data distribution puts equal mass on every ordered edge of the
symmetrized neighbor relation.  The contrast ("noise") distribution follows
from it in closed form: draw an edge, keep its source i, and re-draw the
target uniformly from everything except i, giving

    p_noise(i, j) = row_sum[i] / (N - 1),

where ``row_sum[i]`` is the total data mass of edges leaving i.  Both
distributions are sampled in O(1) via alias tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import CounterRng
from .knn import KnnResult


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric kNN edge list with uniform edge probabilities.

    Ordered pairs are stored explicitly, (i, j) and (j, i) both, sorted by
    (source, target); ``indptr`` is the CSR row pointer over sources.
    """

    n_points: int
    edge_src: np.ndarray  # (E,) int32
    edge_dst: np.ndarray  # (E,) int32
    edge_prob: np.ndarray  # (E,) float64, each 1/E
    row_sum: np.ndarray   # (N,) float64
    indptr: np.ndarray    # (N+1,) int64

    @property
    def n_edges(self) -> int:
        return self.edge_src.shape[0]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)


@dataclass(frozen=True)
class AliasTable:
    """Walker/Vose alias structure for O(1) sampling of a discrete law."""

    prob: np.ndarray   # (K,) float64 in [0, 1]
    alias: np.ndarray  # (K,) int32

    @property
    def n_entries(self) -> int:
        return self.prob.shape[0]

    def reconstructed(self) -> np.ndarray:
        """Recover the input distribution; used to verify table validity.

        Self-aliased entries always carry prob 1, so their (1 - prob) term
        contributes nothing and needs no special casing.
        """
        out = self.prob.copy()
        np.add.at(out, self.alias, 1.0 - self.prob)
        return out / self.n_entries


def build_alias(probs: np.ndarray) -> AliasTable:
    """Build an alias table for ``probs`` (nonnegative, summing to 1)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] == 0:
        raise ValueError("probs must be a nonempty 1-D array")
    if np.any(p < 0.0):
        raise ValueError("negative probability entry")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total!r}, expected 1")
    k = p.shape[0]
    scaled = (p * k).tolist()
    prob = np.ones(k, dtype=np.float64)
    alias = np.arange(k, dtype=np.int32)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    # leftovers hold probability 1 up to rounding
    for i in small:
        prob[i] = 1.0
    for i in large:
        prob[i] = 1.0
    return AliasTable(prob=prob, alias=alias)


@dataclass(frozen=True)
class EdgeSampler:
    """Couples the graph with alias tables for data and noise draws."""

    data_alias: AliasTable
    graph: NeighborGraph
    n_points: int

    @classmethod
    def build(cls, graph: NeighborGraph) -> "EdgeSampler":
        return cls(
            data_alias=build_alias(graph.edge_prob),
            graph=graph,
            n_points=graph.n_points,
        )


def build_graph(knn: KnnResult) -> NeighborGraph:
    """Symmetrize the neighbor relation and normalize to a distribution.

    An ordered pair (i, j) is an edge when j is among i's neighbors or i is
    among j's; every edge carries probability 1/E.
    """
    nbrs = knn.neighbors
    n, k = nbrs.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = nbrs.astype(np.int64).ravel()
    keys = np.concatenate([rows * n + cols, cols * n + rows])
    keys = np.unique(keys)
    src = (keys // n).astype(np.int32)
    dst = (keys % n).astype(np.int32)
    if src.shape[0] == 0:
        raise ValueError("empty edge set")
    n_edges = src.shape[0]
    prob = np.full(n_edges, 1.0 / n_edges, dtype=np.float64)
    deg = np.bincount(src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    row_sum = deg.astype(np.float64) / n_edges
    return NeighborGraph(
        n_points=n, edge_src=src, edge_dst=dst,
        edge_prob=prob, row_sum=row_sum, indptr=indptr,
    )


def noise_prob(graph: NeighborGraph, i: int, j: int) -> float:
    """Contrast-distribution mass of the ordered pair (i, j), constant in j."""
    if i == j:
        raise ValueError("noise pairs have distinct endpoints")
    return float(graph.row_sum[i]) / (graph.n_points - 1)


def sample_data_edge(sampler: EdgeSampler, rng: CounterRng) -> tuple[int, int]:
    """Draw one ordered edge with probability edge_prob."""
    table = sampler.data_alias
    slot = rng.bounded(table.n_entries)
    u = rng.uniform()
    e = slot if u <= table.prob[slot] else int(table.alias[slot])
    return int(sampler.graph.edge_src[e]), int(sampler.graph.edge_dst[e])


def sample_noise_edge(sampler: EdgeSampler, rng: CounterRng) -> tuple[int, int]:
    """Draw a contrast pair: data-edge source, then a uniform non-source target.

    The pair may coincide with a real edge; the procedure never rejects,
    which is exactly what keeps its law equal to ``noise_prob``.
    """
    i, _ = sample_data_edge(sampler, rng)
    k = rng.bounded(sampler.n_points - 1)
    if k >= i:
        k += 1
    return i, k
