"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing (pure-source install) or when CRISISLINE_BACKEND=numpy
is set. CRISISLINE_BACKEND=cython fails loudly instead of falling back.
"""
from __future__ import annotations

import os

from . import numpy_backend

_requested = os.environ.get("CRISISLINE_BACKEND", "auto").lower()

if _requested == "numpy":
    backend = numpy_backend
elif _requested == "cython":
    from . import _core as backend  # type: ignore[no-redef]
else:
    if _requested != "auto":
        raise RuntimeError(f"CRISISLINE_BACKEND must be auto|cython|numpy, got {_requested!r}")
    try:
        from . import _core as backend  # type: ignore[no-redef]
    except ImportError:
        backend = numpy_backend

BACKEND_NAME: str = backend.NAME

mlp_forward = backend.mlp_forward
mlp_loss_grads = backend.mlp_loss_grads
adam_update = backend.adam_update
max_cosine = backend.max_cosine

__all__ = [
    "BACKEND_NAME",
    "backend",
    "numpy_backend",
    "mlp_forward",
    "mlp_loss_grads",
    "adam_update",
    "max_cosine",
]
