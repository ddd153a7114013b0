"""JIT selection for the hot kernels.

Kernels are written in the numba-compatible subset of Python. When numba is
importable and ``QSC_BENCH_DISABLE_JIT`` is unset (or ``0``), they are compiled
with ``numba.njit``; otherwise the same functions run as plain Python over numpy
scalars. The flag is read once, at import.
"""

from __future__ import annotations

import os

ENV_FLAG = "QSC_BENCH_DISABLE_JIT"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_disabled = os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no", "off")
JIT_ENABLED = numba is not None and not _disabled


def kernel(fn):
    if not JIT_ENABLED:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)

