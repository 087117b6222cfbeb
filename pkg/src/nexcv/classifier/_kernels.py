"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. Setting ``NEXCV_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels_ext  # type: ignore[attr-defined]

    BACKENDS["cython"] = _kernels_ext
except ImportError:
    pass

if "cython" in BACKENDS and os.environ.get("NEXCV_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"

loss_grad = BACKENDS[BACKEND].loss_grad
predict_proba = BACKENDS[BACKEND].predict_proba
