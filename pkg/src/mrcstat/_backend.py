"""Pick the compiled kernels when available, else the numpy fallback.

Set ``MRCSTAT_PURE_PYTHON=1`` to force the fallback.  ``GQF_THREADS`` caps
the number of OpenMP threads used by the compiled kernels.
"""

from __future__ import annotations

import os

from . import _fallback

kernels = _fallback
COMPILED = False

if os.environ.get("MRCSTAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:  # extension not built
        kernels = _fallback


def thread_count() -> int:
    value = os.environ.get("GQF_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def name() -> str:
    return "compiled" if COMPILED else "python"
