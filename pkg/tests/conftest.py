import os
import socket

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncembed.graph import EdgeSampler, build_graph
from ncembed.knn import exact_knn
from ncembed.model import DataMatrix

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def make_blobs(n_per: int = 32, dim: int = 10, gap: float = 12.0, seed: int = 0):
    """Two well-separated Gaussian blobs plus their labels."""
    rng = np.random.default_rng(seed)
    x = np.vstack([
        rng.normal(0.0, 1.0, (n_per, dim)),
        rng.normal(gap, 1.0, (n_per, dim)),
    ])
    labels = np.array([0] * n_per + [1] * n_per)
    return DataMatrix(x), labels


def blob_separation(coords: np.ndarray, labels: np.ndarray):
    """Mean intra-cluster and inter-cluster embedding distances."""
    d = np.linalg.norm(coords[:, None] - coords[None], axis=2)
    same = labels[:, None] == labels[None]
    intra = d[same & (d > 0)].mean()
    inter = d[~same].mean()
    return float(intra), float(inter)


def graph_from_points(x: np.ndarray, k: int):
    data = DataMatrix(x)
    graph = build_graph(exact_knn(data, k))
    return graph, EdgeSampler.build(graph)


def knn_label_agreement(coords: np.ndarray, labels: np.ndarray, k: int = 10) -> float:
    """Leave-one-out majority-vote accuracy of a kNN classifier on coords."""
    nn = exact_knn(DataMatrix(coords), k).neighbors
    votes = labels[nn]
    n_classes = int(labels.max()) + 1
    pred = np.array([np.bincount(row, minlength=n_classes).argmax() for row in votes])
    return float((pred == labels).mean())


def load_digits_dataset():
    """Handwritten-digit vectors (N x 64) with labels.

    Prefers the full 5620-sample UCI set: a local file named by
    NCEMBED_DIGITS (CSV, 64 feature columns then a label column), else a
    quick OpenML fetch.  Falls back to the 1797-sample copy bundled with
    scikit-learn when offline.
    """
    path = os.environ.get("NCEMBED_DIGITS")
    if path and os.path.exists(path):
        raw = np.loadtxt(path, delimiter=",")
        return raw[:, :-1].astype(np.float64), raw[:, -1].astype(int), f"file:{path}"
    old_timeout = socket.getdefaulttimeout()
    try:
        socket.setdefaulttimeout(5)
        from sklearn.datasets import fetch_openml

        d = fetch_openml("optdigits", version=1, as_frame=False, parser="liac-arff")
        return d.data.astype(np.float64), d.target.astype(int), "openml:optdigits"
    except Exception:
        pass
    finally:
        socket.setdefaulttimeout(old_timeout)
    from sklearn.datasets import load_digits

    x, y = load_digits(return_X_y=True)
    return x.astype(np.float64), y.astype(int), "sklearn:load_digits(1797)"


@pytest.fixture(scope="session")
def digits():
    return load_digits_dataset()
