"""Fast low-dimensional visualization of high-dimensional vector data.

The pipeline builds an approximate kNN graph (HNSW), initializes coordinates
from the graph's leading spectral directions, and then trains the embedding
by noise-contrastive stochastic gradient ascent with a learned normalizer.
Hot kernels run in a compiled extension when available, with a pure-Python
fallback selected automatically at import.
"""

from .backend import backend_name
from .model import DataMatrix, EmbeddingState, Hyperparams, validate_hyperparams
from .optim import TrainReport
from .pipeline import PipelineResult, embed, run

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "EmbeddingState",
    "Hyperparams",
    "PipelineResult",
    "TrainReport",
    "backend_name",
    "embed",
    "run",
    "validate_hyperparams",
    "__version__",
]
