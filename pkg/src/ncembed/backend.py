"""Select the compiled kernel module, falling back to pure Python.

Set ``NCEMBED_PURE=1`` to force the fallback (used by the benchmark and the
backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _purepy

if os.environ.get("NCEMBED_PURE") == "1":
    _impl = _purepy
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _purepy


def active():
    """The module providing hnsw_build / hnsw_query_chunk / train_chunk."""
    return _impl


def backend_name() -> str:
    return _impl.BACKEND


def pure():
    return _purepy
