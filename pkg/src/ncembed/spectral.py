"""Spectral warm start for the embedding via power iteration.

Iterates the lazy degree-normalized adjacency operator 0.5*(I + D^-1 A) on
the neighbor graph, deflating against the constant vector and previously
found columns after every multiplication.  The lazy form shares eigenvectors
with D^-1 A but shifts the spectrum into [0, 1], so the iteration always
converges toward the leading community structure instead of oscillating on
bipartite-like components whose raw eigenvalues tie at |1|.

Nodes in the same tightly connected block end up with nearby values in each
column, which is what makes this a useful initialization.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graph import NeighborGraph

_COLLAPSE_EPS = 1e-12


def _operator(graph: NeighborGraph) -> sp.csr_matrix:
    n = graph.n_points
    deg = graph.degrees().astype(np.float64)
    # every node has degree >= 1 in a kNN graph with k >= 1
    weights = np.repeat(1.0 / deg, graph.degrees())
    return sp.csr_matrix(
        (weights, graph.edge_dst.astype(np.int64), graph.indptr),
        shape=(n, n),
    )


def random_init(n: int, m: int, seed: int, scale: float = 1e-4) -> np.ndarray:
    """Small random coordinates, used as fallback and for --init random."""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, scale, size=(n, m))


def _rescale(col: np.ndarray, scale: float) -> np.ndarray:
    sd = col.std()
    return col * (scale / sd)


def power_iteration_init(graph: NeighborGraph, m: int, n_iter: int = 100,
                         seed: int = 0, scale: float = 1e-4) -> np.ndarray:
    """Leading nontrivial spectral directions of the neighbor graph.

    Returns an (N, m) matrix whose columns are mutually orthogonal, mean
    zero, and rescaled to standard deviation ``scale``.  Columns that
    collapse to zero under deflation (graphs with too little structure) are
    filled from the seeded RNG at the same scale.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = graph.n_points
    op = _operator(graph)
    rng = np.random.default_rng(seed)
    cols: list[np.ndarray] = []
    units: list[np.ndarray] = []   # unit-norm versions used for deflation
    for _ in range(m):
        v = rng.normal(0.0, 1.0, size=n)
        dead = False
        for _ in range(n_iter):
            v = 0.5 * (v + op @ v)
            v -= v.mean()
            for u in units:
                v -= (u @ v) * u
            norm = np.linalg.norm(v)
            if norm < _COLLAPSE_EPS:
                dead = True
                break
            v /= norm
        if dead:
            v = rng.normal(0.0, 1.0, size=n)
            v -= v.mean()
            for u in units:
                v -= (u @ v) * u
            norm = np.linalg.norm(v)
            if norm < _COLLAPSE_EPS:
                # no usable direction left (tiny graphs); take anything
                v = rng.normal(0.0, 1.0, size=n)
                v -= v.mean()
                norm = np.linalg.norm(v)
            v /= norm
        units.append(v)
        cols.append(_rescale(v, scale))
    return np.ascontiguousarray(np.stack(cols, axis=1))
