import numpy as np
import pytest

from ncembed.model import DataMatrix, EmbeddingState, Hyperparams, validate_hyperparams


class TestDataMatrix:
    def test_basic(self):
        m = DataMatrix(np.arange(6.0).reshape(3, 2))
        assert m.n_rows == 3
        assert m.n_cols == 2
        assert m.values.dtype == np.float64

    def test_too_few_rows(self):
        with pytest.raises(ValueError, match="2 rows"):
            DataMatrix(np.ones((1, 4)))

    def test_rejects_nan(self):
        x = np.ones((3, 3))
        x[1, 2] = np.nan
        with pytest.raises(ValueError, match="row 2, column 3"):
            DataMatrix(x)

    def test_rejects_inf(self):
        x = np.ones((3, 3))
        x[0, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            DataMatrix(x)


class TestValidateHyperparams:
    def test_paper_scale_defaults_ok(self):
        validate_hyperparams(Hyperparams(k=15), 5620)

    def test_k_zero(self):
        with pytest.raises(ValueError, match="k must be >= 1"):
            validate_hyperparams(Hyperparams(k=0), 100)

    def test_k_not_below_n(self):
        with pytest.raises(ValueError, match="k must be < N"):
            validate_hyperparams(Hyperparams(k=10), 10)

    @pytest.mark.parametrize(
        "field,value,msg",
        [
            ("m", 0, "m must be"),
            ("nu", 0, "nu must be"),
            ("a", 0.0, "a must be"),
            ("b", -1.0, "b must be"),
            ("n_epochs", 0, "n_epochs"),
            ("lr0", 0.0, "lr0"),
            ("n_threads", 0, "n_threads"),
            ("metric", "manhattan", "metric"),
            ("grad_clip", 0.0, "grad_clip"),
        ],
    )
    def test_field_violations(self, field, value, msg):
        h = Hyperparams(k=5, **{field: value})
        with pytest.raises(ValueError, match=msg):
            validate_hyperparams(h, 100)

    def test_samples_default_is_n(self):
        assert Hyperparams().samples_per_epoch(123) == 123
        assert Hyperparams(n_samples_per_epoch=7).samples_per_epoch(123) == 7


def test_embedding_state_holds_q():
    st = EmbeddingState(np.zeros((4, 2)), q=1.5)
    assert st.n_points == 4
    assert st.dim == 2
    assert st.q == 1.5
