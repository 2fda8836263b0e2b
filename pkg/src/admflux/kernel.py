"""Backend selection for the graph-field kernel.

The compiled extension is used when it was built; otherwise the numpy
implementation.  Setting ``ADMFLUX_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("ADMFLUX_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
graph_fields = _compiled.graph_fields if _compiled is not None else _kernel_py.graph_fields
graph_fields_python = _kernel_py.graph_fields
graph_fields_compiled = _compiled.graph_fields if _compiled is not None else None

__all__ = ["BACKEND", "graph_fields", "graph_fields_python", "graph_fields_compiled"]
