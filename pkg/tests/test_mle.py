import math

import numpy as np
import pytest

from ncembed.graph import build_graph
from ncembed.knn import KnnResult, exact_knn
from ncembed.model import DataMatrix, EmbeddingState
from ncembed.mle import (
    _likelihood,
    _likelihood_grad,
    mle_gradient_ascent,
    model_mass,
    normalized_likelihood,
)


def triangle_graph():
    nbrs = np.array([[1, 2], [0, 2], [0, 1]], dtype=np.int32)
    return build_graph(KnnResult(neighbors=nbrs, distances=np.zeros((3, 2))))


def small_graph(seed=1, n=20, k=3):
    rng = np.random.default_rng(seed)
    return build_graph(exact_knn(DataMatrix(rng.normal(size=(n, 5))), k))


class TestNormalizedLikelihood:
    def test_equilateral_triangle(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        val = normalized_likelihood(EmbeddingState(tri), triangle_graph(), 1.0, 1.0)
        assert val == pytest.approx(math.log(1 / 6), rel=1e-12)

    def test_translation_invariance(self):
        g = small_graph()
        rng = np.random.default_rng(0)
        z = rng.normal(size=(20, 2))
        v0 = normalized_likelihood(EmbeddingState(z), g, 1.0, 1.0)
        v1 = normalized_likelihood(EmbeddingState(z + np.array([3.0, -7.0])), g, 1.0, 1.0)
        assert abs(v1 - v0) <= 1e-12

    def test_independent_of_q(self):
        g = small_graph()
        rng = np.random.default_rng(1)
        z = rng.normal(size=(20, 2))
        assert normalized_likelihood(EmbeddingState(z, 0.0), g, 1.0, 1.0) == \
            normalized_likelihood(EmbeddingState(z, 5.0), g, 1.0, 1.0)


class TestGradient:
    def test_matches_finite_differences(self):
        g = small_graph(seed=2)
        rng = np.random.default_rng(2)
        step = 1e-5
        worst = 0.0
        for _ in range(50):
            z = rng.normal(0, 0.5, (20, 2))
            ga = _likelihood_grad(z, g, 1.0, 1.0)
            gn = np.zeros_like(z)
            for i in range(20):
                for d in range(2):
                    zp = z.copy()
                    zp[i, d] += step
                    zm = z.copy()
                    zm[i, d] -= step
                    gn[i, d] = (_likelihood(zp, g, 1.0, 1.0)
                                - _likelihood(zm, g, 1.0, 1.0)) / (2 * step)
            denom = max(np.linalg.norm(ga), np.linalg.norm(gn))
            worst = max(worst, np.linalg.norm(ga - gn) / denom)
        assert worst < 1e-6

    def test_nondecreasing_trajectory(self):
        g = small_graph(seed=3)
        z = np.random.default_rng(3).normal(0, 1e-2, (20, 2))
        prev = _likelihood(z, g, 1.0, 1.0)
        for _ in range(300):
            z = z + 1e-3 * _likelihood_grad(z, g, 1.0, 1.0)
            cur = _likelihood(z, g, 1.0, 1.0)
            assert cur >= prev - 1e-12
            prev = cur


class TestAscent:
    def test_triangle_converges_to_equilateral(self):
        g = triangle_graph()
        state = mle_gradient_ascent(g, 2, 1.0, 1.0, n_steps=60_000, step=5e-2, seed=0)
        z = state.coords
        d = [np.linalg.norm(z[i] - z[j]) for i, j in [(0, 1), (0, 2), (1, 2)]]
        assert max(d) - min(d) < 1e-3

    def test_deterministic(self):
        g = small_graph(seed=4)
        a = mle_gradient_ascent(g, 2, 1.0, 1.0, 100, 1e-2, seed=9)
        b = mle_gradient_ascent(g, 2, 1.0, 1.0, 100, 1e-2, seed=9)
        assert np.array_equal(a.coords, b.coords)


def test_model_mass_tracks_q():
    g = triangle_graph()
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    m0 = model_mass(EmbeddingState(tri, 0.0), 1.0, 1.0)
    m1 = model_mass(EmbeddingState(tri, math.log(2.0)), 1.0, 1.0)
    assert m1 == pytest.approx(m0 / 2.0)
