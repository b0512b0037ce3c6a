"""Pairwise dissimilarities for neighbor search.

Only non-negativity and symmetry are required of a dissimilarity here; no
triangle inequality is assumed anywhere downstream.
"""

from __future__ import annotations

import numpy as np

METRICS = ("euclidean", "cosine")


def euclidean_sq(u: np.ndarray, v: np.ndarray) -> float:
    """Squared Euclidean distance.

    Squared rather than rooted: monotone-equivalent for nearest-neighbor
    ranking and cheaper per comparison.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    d = u - v
    return float(np.dot(d, d))


def cosine_dist(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2].

    A zero-norm vector is defined to be at distance 1.0 from everything
    (maximally uninformative); averaged-word-vector pipelines legitimately
    produce all-zero rows, so this must not be an error.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 1.0
    c = float(np.dot(u, v) / (nu * nv))
    return max(0.0, 1.0 - c)


def normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit L2 norm; zero rows stay zero.

    After this transform ``1 - u.v`` equals the cosine distance, which is
    what the index kernels evaluate.
    """
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return np.ascontiguousarray(x / norms)
