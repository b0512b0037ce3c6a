"""Model density, contrastive objective terms, and per-sample gradients.

The model assigns an ordered pair the unnormalized density

    p_model(i, j) = exp(-Q) / (1 + a * ||z_i - z_j||**(2b)),

with the scalar Q trained like any other parameter.  Each training sample
contributes a logistic discrimination term between the model and ``nu``
times the contrast density; everything here is evaluated in the log domain
so that wildly mismatched densities cannot underflow.

``full_objective`` evaluates the exact expectation over all ordered pairs in
O(N^2); it exists for tests and diagnostics, not for training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import NeighborGraph
from .model import EmbeddingState, Hyperparams

_EPS_SQ = 1e-24  # floor on squared distance when b < 1


@dataclass
class SampleGrad:
    """Ascent direction contributed by one sampled pair."""

    d_zi: np.ndarray
    d_zj: np.ndarray
    d_q: float
    objective_term: float


def _softplus(x: float) -> float:
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def model_prob(zi: np.ndarray, zj: np.ndarray, q: float,
               a: float, b: float) -> float:
    """Unnormalized pair density exp(-q) / (1 + a d^(2b))."""
    diff = np.asarray(zi, dtype=np.float64) - np.asarray(zj, dtype=np.float64)
    s = float(np.dot(diff, diff))
    return math.exp(-q) / (1.0 + a * s**b)


def positive_term(pm: float, pn: float, nu: int) -> float:
    """log(pm / (pm + nu*pn)), the data half of the discrimination objective."""
    if pn <= 0.0:
        return 0.0
    return -math.log1p(nu * pn / pm)


def noise_term(pm: float, pn: float, nu: int) -> float:
    """log(nu*pn / (pm + nu*pn)), the contrast half."""
    if pn <= 0.0:
        raise ValueError("noise pairs require pn > 0")
    return -math.log1p(pm / (nu * pn))


def _pair_core(zi, zj, q, a, b, pn, nu, sign):
    """Shared gradient path; mirrors the training kernels exactly."""
    zi = np.asarray(zi, dtype=np.float64)
    zj = np.asarray(zj, dtype=np.float64)
    diff = zi - zj
    s = float(np.dot(diff, diff))
    if b == 1.0:
        spow = 1.0
        asb = a * s
    else:
        s = max(s, _EPS_SQ)
        spow = math.pow(s, b - 1.0)
        asb = a * s * spow
    logqhat = -math.log1p(asb)
    if pn <= 0.0:
        tt = math.inf
    else:
        tt = logqhat - q - math.log(nu * pn)
    if sign > 0:
        w = 1.0 / (1.0 + math.exp(tt)) if tt < math.inf else 0.0
        term = -_softplus(-tt) if tt < math.inf else 0.0
    else:
        w = -1.0 / (1.0 + math.exp(-tt))
        term = -_softplus(tt)
    coeff = w * (-2.0 * a * b * spow / (1.0 + asb))
    if math.isnan(coeff):
        coeff = 0.0
    d_zi = coeff * diff
    return SampleGrad(d_zi=d_zi, d_zj=-d_zi, d_q=-w, objective_term=term)


def positive_grad(zi, zj, q: float, a: float, b: float,
                  pn: float, nu: int) -> SampleGrad:
    """Gradient of the data term w.r.t. (z_i, z_j, Q).

    The weight nu*pn / (pm + nu*pn) multiplies the gradient of log p_model;
    it fades to zero once the pair is already far more likely under the
    model than under the contrast distribution.
    """
    return _pair_core(zi, zj, q, a, b, pn, nu, +1)


def noise_grad(zi, zj, q: float, a: float, b: float,
               pn: float, nu: int) -> SampleGrad:
    """Gradient of one contrast term; pushes the pair apart and raises Q."""
    if pn <= 0.0:
        raise ValueError("noise pairs require pn > 0")
    return _pair_core(zi, zj, q, a, b, pn, nu, -1)


def full_objective(state: EmbeddingState, graph: NeighborGraph,
                   h: Hyperparams) -> float:
    """Exact expectation form of the objective over all ordered pairs.

    O(N^2) memory and time; a test oracle for small instances.
    """
    z = state.coords
    n = graph.n_points
    nu = h.nu
    d = z[:, None, :] - z[None, :, :]
    s = np.einsum("ijk,ijk->ij", d, d)
    if h.b != 1.0:
        s = np.maximum(s, _EPS_SQ)
    logqhat = -np.log1p(h.a * s**h.b)
    off = ~np.eye(n, dtype=bool)
    pn_row = graph.row_sum / (n - 1)            # p_noise(i, .) per source
    with np.errstate(divide="ignore"):
        log_nupn = np.log(nu * pn_row)
    tt = logqhat - state.q - log_nupn[:, None]

    # stable elementwise softplus
    sp = np.where(tt > 0, tt, 0.0) + np.log1p(np.exp(-np.abs(tt)))
    pos = tt - sp          # log sigmoid(tt)
    neg = -sp              # log sigmoid(-tt)

    e_data = float(
        np.sum(graph.edge_prob * pos[graph.edge_src, graph.edge_dst])
    )
    e_noise = float(np.sum((pn_row[:, None] * neg)[off]))
    return e_data + nu * e_noise
