import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ncembed.distance import cosine_dist, euclidean_sq, normalize_rows

finite_vec = arrays(
    np.float64, st.integers(1, 6),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


class TestEuclideanSq:
    def test_identity(self):
        v = np.array([1.0, -2.0, 3.5])
        assert euclidean_sq(v, v) == 0.0

    def test_three_four_five(self):
        assert euclidean_sq(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 25.0

    def test_hand_computed(self):
        assert euclidean_sq(np.array([1.0, 2, 3]), np.array([4.0, 6, 3])) == 25.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            euclidean_sq(np.ones(2), np.ones(3))


class TestCosineDist:
    def test_same_direction(self):
        v = np.array([2.0, 1.0])
        assert cosine_dist(v, 3.0 * v) <= 1e-12

    def test_orthogonal(self):
        assert cosine_dist(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_opposite(self):
        assert cosine_dist(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(2.0)

    def test_zero_norm_convention(self):
        z = np.zeros(3)
        assert cosine_dist(z, np.array([1.0, 2.0, 3.0])) == 1.0
        assert cosine_dist(z, z) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_dist(np.ones(2), np.ones(3))


@given(finite_vec.flatmap(lambda u: st.tuples(st.just(u), arrays(
    np.float64, len(u), elements=st.floats(-1e6, 1e6, allow_nan=False)))))
def test_symmetry_and_nonnegativity(uv):
    u, v = uv
    assert euclidean_sq(u, v) >= 0.0
    assert euclidean_sq(u, v) == euclidean_sq(v, u)
    cd = cosine_dist(u, v)
    assert 0.0 <= cd <= 2.0 + 1e-12
    assert cd == cosine_dist(v, u)


def test_normalize_rows_keeps_zero_rows():
    x = np.array([[3.0, 4.0], [0.0, 0.0]])
    out = normalize_rows(x)
    assert np.allclose(out[0], [0.6, 0.8])
    assert np.all(out[1] == 0.0)
