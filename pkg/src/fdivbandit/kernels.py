"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_kernels_py``.  Set ``FDIVBANDIT_PURE_PYTHON=1`` to
force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("FDIVBANDIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

d2_tables = _impl.d2_tables
greedy_cover = _impl.greedy_cover
lexicode = _impl.lexicode

__all__ = ["BACKEND", "d2_tables", "greedy_cover", "lexicode"]
