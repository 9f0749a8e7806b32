"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``NEWSGEO_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("NEWSGEO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

accumulate_elevation = _impl.accumulate_elevation
label_components = _impl.label_components

__all__ = ["BACKEND", "accumulate_elevation", "label_components"]
