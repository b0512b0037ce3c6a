"""Shared data model: input matrix, embedding state, hyperparameters."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DataMatrix:
    """Dense N x M matrix of input vectors.

    Rejects non-finite values at construction; silent NaN propagation through
    stochastic training is not debuggable after the fact.
    """

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"input must be 2-D, got shape {arr.shape}")
        n, m = arr.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if m < 1:
            raise ValueError(f"need at least 1 column, got {m}")
        if not np.isfinite(arr).all():
            r, c = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite value at row {r + 1}, column {c + 1}")
        self.values = arr

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


class EmbeddingState:
    """Embedding coordinates plus the learned scalar normalizer Q.

    The model assigns each pair the unnormalized density
    ``exp(-Q) / (1 + a * ||z_i - z_j||**(2b))``; Q is trained jointly with
    the coordinates so the model normalizes itself.
    """

    __slots__ = ("coords", "q")

    def __init__(self, coords: np.ndarray, q: float = 0.0):
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError("coords must be 2-D")
        self.coords = coords
        self.q = float(q)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


def _default_threads() -> int:
    return os.cpu_count() or 1


@dataclass
class Hyperparams:
    """Knobs for the full pipeline.

    ``n_samples_per_epoch=None`` means "one sample per input point", the
    convention used throughout.  ``lr0`` decays linearly to ``lr0/n_epochs``
    over the run.
    """

    k: int = 15
    m: int = 2
    nu: int = 5
    a: float = 1.0
    b: float = 1.0
    n_epochs: int = 50
    n_samples_per_epoch: Optional[int] = None
    lr0: float = 1.0
    seed: int = 42
    n_threads: int = field(default_factory=_default_threads)
    metric: str = "euclidean"
    grad_clip: float = 4.0

    def samples_per_epoch(self, n: int) -> int:
        return n if self.n_samples_per_epoch is None else self.n_samples_per_epoch


def validate_hyperparams(h: Hyperparams, n: int) -> None:
    """Raise ValueError naming the offending field if any invariant fails."""
    if h.k < 1:
        raise ValueError("k must be >= 1")
    if h.k >= n:
        raise ValueError(f"k must be < N (got k={h.k}, N={n})")
    if h.m < 1:
        raise ValueError("m must be >= 1")
    if h.nu < 1:
        raise ValueError("nu must be >= 1")
    if not h.a > 0:
        raise ValueError("a must be > 0")
    if not h.b > 0:
        raise ValueError("b must be > 0")
    if h.n_epochs < 1:
        raise ValueError("n_epochs must be >= 1")
    if h.samples_per_epoch(n) < 1:
        raise ValueError("n_samples_per_epoch must be >= 1")
    if not h.lr0 > 0:
        raise ValueError("lr0 must be > 0")
    if h.n_threads < 1:
        raise ValueError("n_threads must be >= 1")
    if h.metric not in ("euclidean", "cosine"):
        raise ValueError(f"metric must be 'euclidean' or 'cosine', got {h.metric!r}")
    if not h.grad_clip > 0:
        raise ValueError("grad_clip must be > 0")
