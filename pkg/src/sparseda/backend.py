"""Selects the coordinate descent kernel at import time.

The compiled extension (``sparseda._cdcore``) is preferred; the
pure-numpy twin (``sparseda._cdpure``) is the fallback when the
extension was not built.  Set ``SPARSEDA_BACKEND=python`` or
``SPARSEDA_BACKEND=compiled`` to force one side (the benchmark and the
cross-backend tests rely on this).
"""

from __future__ import annotations

import os

from . import _cdpure

_forced = os.environ.get("SPARSEDA_BACKEND", "").strip().lower()

if _forced == "python":
    _kernel = _cdpure.cd_lasso
    BACKEND = "python"
else:
    try:
        from . import _cdcore

        _kernel = _cdcore.cd_lasso
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _kernel = _cdpure.cd_lasso
        BACKEND = "python"


def backend_name() -> str:
    """Name of the kernel in use: 'compiled' or 'python'."""
    return BACKEND


def cd_lasso(q, c, lam, v, tol, max_iter, obj_path=None):
    """Run the selected kernel; see ``sparseda._cdpure.cd_lasso``."""
    return _kernel(q, c, lam, v, tol, max_iter, obj_path)
