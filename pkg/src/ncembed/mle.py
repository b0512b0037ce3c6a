"""Normalized maximum-likelihood oracle for small instances.

Where the contrastive trainer learns an unnormalized model plus a
normalizer, this module maximizes the explicitly normalized likelihood

    L = sum_edges p_d(i,j) * log( qhat_ij / Z ),   Z = sum_{i != j} qhat_ij,

by full-batch gradient ascent with an O(N^2) normalization term.  For a
large noise ratio the two optimizations share stationary points, which makes
this a strong desk-scale cross-check of the whole training stack.  It is
exposed through the hidden ``oracle`` CLI subcommand for reproducibility
scripts, not as a user feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import NeighborGraph
from .model import EmbeddingState
from .spectral import random_init

# large enough that the kernel has curvature at the starting configuration;
# near-coincident inits make the normalized objective pathologically flat
_INIT_SCALE = 0.1
_EPS_SQ = 1e-24


def _kernel_parts(z: np.ndarray, a: float, b: float):
    d = z[:, None, :] - z[None, :, :]
    s = np.einsum("ijk,ijk->ij", d, d)
    if b != 1.0:
        s = np.maximum(s, _EPS_SQ)
    sb = s**b
    qhat = 1.0 / (1.0 + a * sb)
    np.fill_diagonal(qhat, 0.0)
    # d log(qhat)/d z_i = gcoef * (z_i - z_j); s is clamped away from zero
    # whenever b != 1, so spow stays finite
    spow = s ** (b - 1.0)
    gcoef = -2.0 * a * b * spow * qhat
    np.fill_diagonal(gcoef, 0.0)
    return qhat, gcoef


def _edge_weight_matrix(graph: NeighborGraph) -> np.ndarray:
    n = graph.n_points
    w = np.zeros((n, n))
    w[graph.edge_src, graph.edge_dst] = graph.edge_prob
    return w


def _likelihood(z: np.ndarray, graph: NeighborGraph, a: float, b: float) -> float:
    qhat, _ = _kernel_parts(z, a, b)
    zsum = qhat.sum()
    logq = np.log(qhat[graph.edge_src, graph.edge_dst])
    return float(np.sum(graph.edge_prob * (logq - np.log(zsum))))


def _likelihood_grad(z: np.ndarray, graph: NeighborGraph,
                     a: float, b: float) -> np.ndarray:
    qhat, gcoef = _kernel_parts(z, a, b)
    zsum = qhat.sum()
    w = _edge_weight_matrix(graph)
    c = 2.0 * (w - qhat / zsum) * gcoef
    return c.sum(axis=1)[:, None] * z - c @ z


def normalized_likelihood(state: EmbeddingState, graph: NeighborGraph,
                          a: float, b: float) -> float:
    """Exact normalized log-likelihood of the embedding; independent of Q."""
    return _likelihood(state.coords, graph, a, b)


def mle_gradient_ascent(graph: NeighborGraph, m: int, a: float, b: float,
                        n_steps: int, step: float, seed: int) -> EmbeddingState:
    """Full-batch ascent on the normalized likelihood.

    Starts from ``random_init(n, m, seed, 1e-2)``; callers that need the
    same starting point (for cross-checks against the stochastic trainer)
    can reproduce it with that call.
    """
    z = random_init(graph.n_points, m, seed, _INIT_SCALE)
    for _ in range(n_steps):
        z = z + step * _likelihood_grad(z, graph, a, b)
    return EmbeddingState(z, q=0.0)


def model_mass(state: EmbeddingState, a: float, b: float) -> float:
    """Total unnormalized model mass sum_{i != j} q_ij at the current Q."""
    qhat, _ = _kernel_parts(state.coords, a, b)
    return float(np.exp(-state.q) * qhat.sum())


@dataclass
class CorrespondenceResult:
    likelihood_nce: float
    likelihood_mle: float
    model_mass: float
    final_q: float


def run_correspondence(n_points: int = 30, k: int = 4, nu: int = 100,
                       m: int = 2, a: float = 1.0, b: float = 1.0,
                       n_epochs: int = 400, lr0: float = 0.2,
                       mle_steps: int = 50_000, mle_step: float = 5e-2,
                       seed: int = 7) -> CorrespondenceResult:
    """Train stochastically with a large noise ratio and compare against the
    normalized-likelihood optimum reached from the identical initialization.
    """
    from .graph import EdgeSampler, build_graph
    from .knn import exact_knn
    from .model import DataMatrix, Hyperparams
    from .optim import train

    rng = np.random.default_rng(seed)
    data = DataMatrix(rng.normal(size=(n_points, 8)))
    graph = build_graph(exact_knn(data, k))
    sampler = EdgeSampler.build(graph)

    mle_state = mle_gradient_ascent(graph, m, a, b, mle_steps, mle_step, seed)

    nce_state = EmbeddingState(
        random_init(n_points, m, seed, _INIT_SCALE).copy(), q=0.0
    )
    h = Hyperparams(
        k=k, m=m, nu=nu, a=a, b=b, n_epochs=n_epochs,
        n_samples_per_epoch=20 * n_points, lr0=lr0, seed=seed, n_threads=1,
    )
    train(nce_state, sampler, graph, h)
    return CorrespondenceResult(
        likelihood_nce=normalized_likelihood(nce_state, graph, a, b),
        likelihood_mle=normalized_likelihood(mle_state, graph, a, b),
        model_mass=model_mass(nce_state, a, b),
        final_q=nce_state.q,
    )
