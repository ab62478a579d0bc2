"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``CVTNET_PURE_PYTHON=1`` to force the fallback.
"""
import os

from cvtnet import _pykernels

if os.environ.get("CVTNET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from cvtnet import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

kendall_counts = _impl.kendall_counts
best_split = _impl.best_split

__all__ = ["BACKEND", "kendall_counts", "best_split"]
