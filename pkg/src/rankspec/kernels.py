"""Backend selection for the framing / overlap-add kernels.

The compiled extension is used when it imports; otherwise the NumPy
fallback is used. Setting ``RANKSPEC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("RANKSPEC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

frame_signal = _impl.frame_signal
overlap_add = _impl.overlap_add
window_sumsquare = _impl.window_sumsquare

__all__ = ["BACKEND", "frame_signal", "overlap_add", "window_sumsquare"]
