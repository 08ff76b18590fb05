"""Numeric kernel backends.

The hot inner loops (boosted-tree split search, tree traversal, k-NN
selection) live either in the compiled Cython extension ``_kernels`` or in
the vectorized numpy fallback ``_fallback``. The compiled backend is picked
automatically when present; set ``ALIDS_BACKEND=numpy`` or
``ALIDS_BACKEND=compiled`` to force one.

Both backends implement the same three functions and, for the boosting
kernels, produce bitwise-identical results by construction (identical
accumulation order and IEEE expressions). k-NN distances may differ in the
last few ulps because the fallback uses a BLAS product expansion; scores
downstream agree to ~1e-9.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _fallback

_FORCED = os.environ.get("ALIDS_BACKEND", "").strip().lower()

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None


def available_backends() -> list[str]:
    names = ["numpy"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_kernels(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (default: best available)."""
    if name in (None, ""):
        name = _FORCED or ("compiled" if _compiled is not None else "numpy")
    if name == "numpy":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r} (expected 'compiled' or 'numpy')")


kernels = get_kernels()

#: Name of the backend selected at import time.
BACKEND: str = "compiled" if kernels is _compiled else "numpy"
