"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Setting ``GLYSET_PURE=1`` forces the fallback.
"""

import os

from glyset import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("GLYSET_PURE", "") not in ("1", "true", "yes"):
    try:
        from glyset import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels

logistic_loss_grad = _impl.logistic_loss_grad
ds_log_terms = _impl.ds_log_terms
ds_confusion_counts = _impl.ds_confusion_counts
coincidence_matrix = _impl.coincidence_matrix

__all__ = [
    "BACKEND",
    "logistic_loss_grad",
    "ds_log_terms",
    "ds_confusion_counts",
    "coincidence_matrix",
]
