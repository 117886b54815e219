"""Numerical kernel backend selection.

The compiled Cython core is used when importable; otherwise the pure NumPy
fallback takes over with identical semantics. Set ``PAEBACK_BACKEND=python``
to force the fallback (e.g. for benchmarking).
"""

import os

if os.environ.get("PAEBACK_BACKEND", "").strip().lower() == "python":
    from . import _purepy as kernels
else:
    try:
        from . import _core as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _purepy as kernels

BACKEND = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
