"""Kernel backend selection.

The compiled extension is preferred when present; setting ``TEXTMCL_PURE=1``
in the environment forces the NumPy fallback. Both backends expose the same
three functions with identical numerics.
"""

from __future__ import annotations

import os

from . import _core_py

_impl = _core_py
_backend_name = "python"

if os.environ.get("TEXTMCL_PURE", "0") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled

        _impl = _compiled
        _backend_name = "compiled"
    except ImportError:
        pass


def backend_name() -> str:
    """Which kernel backend is active: 'compiled' or 'python'."""
    return _backend_name


edt_sq_cells = _impl.edt_sq_cells
scan_log_weights = _impl.scan_log_weights
raycast_grid = _impl.raycast_grid
