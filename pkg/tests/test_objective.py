import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncembed.graph import build_graph
from ncembed.knn import KnnResult, exact_knn
from ncembed.model import DataMatrix, EmbeddingState, Hyperparams
from ncembed.objective import (
    full_objective,
    model_prob,
    noise_grad,
    noise_term,
    positive_grad,
    positive_term,
)


class TestModelProb:
    def test_coincident_points_q_zero(self):
        z = np.array([0.3, -0.2])
        assert model_prob(z, z, 0.0, 1.0, 1.0) == 1.0

    def test_unit_distance(self):
        assert model_prob(np.array([0.0]), np.array([1.0]), 0.0, 1.0, 1.0) == 0.5

    def test_q_scales_exponentially(self):
        v = model_prob(np.array([0.0]), np.array([1.0]), math.log(2.0), 1.0, 1.0)
        assert v == pytest.approx(0.25)

    def test_symmetric(self):
        zi = np.array([1.0, 2.0])
        zj = np.array([-0.5, 0.3])
        assert model_prob(zi, zj, 0.4, 1.3, 0.8) == model_prob(zj, zi, 0.4, 1.3, 0.8)


class TestTerms:
    def test_positive_equal_densities(self):
        assert positive_term(0.3, 0.3, 1) == pytest.approx(math.log(0.5))

    def test_positive_zero_noise(self):
        assert positive_term(0.5, 0.0, 5) == 0.0

    def test_positive_nu4(self):
        assert positive_term(1.0, 1.0, 4) == pytest.approx(math.log(1 / 5))

    def test_noise_balanced(self):
        assert noise_term(1.0, 1.0, 1) == pytest.approx(math.log(0.5))

    def test_noise_vanishing_model(self):
        assert noise_term(1e-12, 1.0, 1) > -1e-11

    def test_noise_nu4(self):
        assert noise_term(4.0, 1.0, 4) == pytest.approx(math.log(0.5))

    def test_noise_requires_positive_pn(self):
        with pytest.raises(ValueError):
            noise_term(1.0, 0.0, 1)

    def test_terms_are_nonpositive(self):
        assert positive_term(2.0, 0.5, 3) <= 0.0
        assert noise_term(2.0, 0.5, 3) < 0.0


class TestGradWeights:
    def test_positive_balanced_weight(self):
        # pm == nu*pn: the data weight is 1/2, so d_q = -1/2
        zi = np.array([0.0, 0.0])
        zj = np.array([1.0, 0.0])  # qhat = 1/2 -> pm = 1/2 at Q=0
        g = positive_grad(zi, zj, 0.0, 1.0, 1.0, 0.5, 1)
        assert g.d_q == pytest.approx(-0.5)

    def test_noise_balanced_weight(self):
        zi = np.array([0.0, 0.0])
        zj = np.array([1.0, 0.0])
        g = noise_grad(zi, zj, 0.0, 1.0, 1.0, 0.5, 1)
        assert g.d_q == pytest.approx(0.5)

    def test_coincident_gradient_vanishes(self):
        z = np.array([0.7, -0.1])
        g = positive_grad(z, z.copy(), 0.0, 1.0, 1.0, 0.1, 5)
        assert np.all(g.d_zi == 0.0)

    def test_far_noise_barely_repels(self):
        zi = np.zeros(2)
        zj = np.array([200.0, 0.0])  # pm tiny against nu*pn
        g = noise_grad(zi, zj, 0.0, 1.0, 1.0, 1.0, 5)
        assert np.linalg.norm(g.d_zi) < 1e-6

    def test_objective_term_matches_standalone(self):
        zi = np.array([0.1, 0.4])
        zj = np.array([-0.3, 0.2])
        pm = model_prob(zi, zj, 0.3, 1.0, 0.9)
        g = positive_grad(zi, zj, 0.3, 1.0, 0.9, 0.05, 5)
        assert g.objective_term == pytest.approx(positive_term(pm, 0.05, 5), rel=1e-12)
        gn = noise_grad(zi, zj, 0.3, 1.0, 0.9, 0.05, 5)
        assert gn.objective_term == pytest.approx(noise_term(pm, 0.05, 5), rel=1e-12)


@given(
    st.integers(0, 10_000),
    st.sampled_from([1.0, 0.9, 1.3]),
    st.sampled_from([1, 5, 100]),
)
def test_antisymmetry(seed, b, nu):
    rng = np.random.default_rng(seed)
    zi = rng.normal(size=3)
    zj = rng.normal(size=3)
    pn = float(rng.uniform(1e-4, 0.2))
    for fn in (positive_grad, noise_grad):
        g = fn(zi, zj, float(rng.normal()), 1.0, b, pn, nu)
        assert np.array_equal(g.d_zi, -g.d_zj)
        assert np.isfinite(g.d_zi).all()
        assert math.isfinite(g.d_q)


def _fd_check(gradfn, termfn, rng, n_configs, step=1e-5):
    """Max vector-relative error of analytic vs central-difference gradients."""
    worst = 0.0
    for _ in range(n_configs):
        m = int(rng.integers(1, 4))
        zi = rng.normal(0, 1, m)
        zj = rng.normal(0, 1, m)
        q = float(rng.normal(0, 0.7))
        a = float(rng.uniform(0.4, 2.0))
        b = float(rng.choice([1.0, 0.9, 1.3]))
        pn = float(rng.uniform(1e-3, 0.2))
        nu = int(rng.choice([1, 5, 100]))
        g = gradfn(zi, zj, q, a, b, pn, nu)
        analytic = np.concatenate([g.d_zi, g.d_zj, [g.d_q]])

        def f(zi_, zj_, q_):
            return termfn(model_prob(zi_, zj_, q_, a, b), pn, nu)

        numeric = np.zeros(2 * m + 1)
        for d in range(m):
            e = np.zeros(m)
            e[d] = step
            numeric[d] = (f(zi + e, zj, q) - f(zi - e, zj, q)) / (2 * step)
            numeric[m + d] = (f(zi, zj + e, q) - f(zi, zj - e, q)) / (2 * step)
        numeric[2 * m] = (f(zi, zj, q + step) - f(zi, zj, q - step)) / (2 * step)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        worst = max(worst, np.linalg.norm(analytic - numeric) / denom)
    return worst


def test_positive_grad_matches_finite_differences():
    rng = np.random.default_rng(42)
    assert _fd_check(positive_grad, positive_term, rng, 120) < 1e-5


def test_noise_grad_matches_finite_differences():
    rng = np.random.default_rng(43)
    assert _fd_check(noise_grad, noise_term, rng, 120) < 1e-5


def small_instance(seed=1, n=20, k=3):
    rng = np.random.default_rng(seed)
    data = DataMatrix(rng.normal(size=(n, 5)))
    return build_graph(exact_knn(data, k))


class TestFullObjective:
    def test_finite(self):
        g = small_instance()
        rng = np.random.default_rng(0)
        st_ = EmbeddingState(rng.normal(size=(20, 2)), q=0.5)
        assert math.isfinite(full_objective(st_, g, Hyperparams(k=3)))

    def test_rigid_motion_invariance(self):
        g = small_instance()
        rng = np.random.default_rng(1)
        z = rng.normal(size=(20, 2))
        h = Hyperparams(k=3)
        j0 = full_objective(EmbeddingState(z, 0.3), g, h)
        th = 0.83
        rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        z2 = z @ rot.T + np.array([5.0, -11.0])
        j1 = full_objective(EmbeddingState(z2, 0.3), g, h)
        assert abs(j1 - j0) <= 1e-9

    def test_collapse_scores_below_spread(self):
        # 3-point complete graph: coincident points lose to the equilateral
        # triangle even when each is given its own best Q from a 1-D scan
        nbrs = np.array([[1, 2], [0, 2], [0, 1]], dtype=np.int32)
        g = build_graph(KnnResult(neighbors=nbrs, distances=np.zeros((3, 2))))
        h = Hyperparams(k=2)
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        flat = np.zeros((3, 2))
        qs = np.linspace(-3, 5, 161)
        best_tri = max(full_objective(EmbeddingState(tri, q), g, h) for q in qs)
        best_flat = max(full_objective(EmbeddingState(flat, q), g, h) for q in qs)
        assert best_flat < best_tri

    def test_full_batch_ascent_increases(self):
        g = small_instance(seed=3)
        h = Hyperparams(k=3, nu=5)
        rng = np.random.default_rng(3)
        z = rng.normal(0, 0.1, size=(20, 2))
        q = 0.0
        state = EmbeddingState(z, q)
        prev = full_objective(state, g, h)
        step = 1e-3
        eps = 1e-6
        for it in range(100):
            # numeric full-batch gradient via the per-pair analytic grads
            grad = np.zeros_like(state.coords)
            gq = 0.0
            pn_row = g.row_sum / (g.n_points - 1)
            for e in range(g.n_edges):
                i, j = int(g.edge_src[e]), int(g.edge_dst[e])
                sg = positive_grad(state.coords[i], state.coords[j], state.q,
                                   h.a, h.b, float(pn_row[i]), h.nu)
                grad[i] += g.edge_prob[e] * sg.d_zi
                grad[j] += g.edge_prob[e] * sg.d_zj
                gq += g.edge_prob[e] * sg.d_q
            for i in range(g.n_points):
                for j in range(g.n_points):
                    if i == j:
                        continue
                    sg = noise_grad(state.coords[i], state.coords[j], state.q,
                                    h.a, h.b, float(pn_row[i]), h.nu)
                    grad[i] += h.nu * pn_row[i] * sg.d_zi
                    grad[j] += h.nu * pn_row[i] * sg.d_zj
                    gq += h.nu * pn_row[i] * sg.d_q
            state.coords += step * grad
            state.q += step * gq
            cur = full_objective(state, g, h)
            assert cur >= prev - eps
            prev = cur
