"""Hot kernels: compiled core when available, numpy fallback otherwise.

``BACKEND`` reports which implementation is active ("compiled" or "python").
Set SVAUDIT_PURE_PYTHON=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import _pyfallback

BACKEND = "python"

if os.environ.get("SVAUDIT_PURE_PYTHON") != "1":
    try:
        from . import _core  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _core = None  # noqa: N816
else:
    _core = None  # noqa: N816

_impl = _core if BACKEND == "compiled" else _pyfallback

cosine_scores = _impl.cosine_scores
confusion_counts = _impl.confusion_counts
roc_counts = _impl.roc_counts

__all__ = ["BACKEND", "cosine_scores", "confusion_counts", "roc_counts"]
