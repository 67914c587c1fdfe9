"""Kernel backend selection: compiled extension when available, pure Python otherwise.

Set ``CLICKSEG_PURE=1`` to force the pure-Python implementations.
"""

import os

if os.environ.get("CLICKSEG_PURE", "") == "1":
    from . import _fallback as _impl

    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        from . import _fallback as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

edt_sq = _impl.edt_sq
grid_maxflow = _impl.grid_maxflow


def backend_name() -> str:
    return BACKEND
