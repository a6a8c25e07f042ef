"""Kernel backend selection.

The compiled extension is preferred; the numpy implementation is the
fallback.  Set TEXTDIV_BACKEND=python or TEXTDIV_BACKEND=compiled to force
one side (the benchmark and the cross-backend tests rely on this).
"""

from __future__ import annotations

import os

_requested = os.environ.get("TEXTDIV_BACKEND", "")

if _requested == "python":
    from . import _python as backend

    BACKEND_NAME = "python"
elif _requested == "compiled":
    from . import _speedups as backend  # type: ignore[no-redef]

    BACKEND_NAME = "compiled"
elif _requested:
    raise ImportError(
        f"TEXTDIV_BACKEND={_requested!r} not recognized (use 'python' or 'compiled')"
    )
else:
    try:
        from . import _speedups as backend  # type: ignore[no-redef]

        BACKEND_NAME = "compiled"
    except ImportError:
        from . import _python as backend

        BACKEND_NAME = "python"

__all__ = ["backend", "BACKEND_NAME"]
