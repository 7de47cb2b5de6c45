"""Step-kernel backend selection.

The compiled extension is used when present; otherwise the NumPy
implementation. Set HERDSIM_BACKEND=numpy or =cython to force one (forcing
cython without the built extension is an error). Results are bit-exactly
reproducible per backend; across backends they agree to floating-point
roundoff because the neighbor sums are reduced in different orders.
"""

from __future__ import annotations

import os

from . import _kernels_np

try:
    from . import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _kernels_cy is not None else ("numpy",)


def get_backend(name: str):
    if name == "numpy":
        return _kernels_np
    if name == "cython":
        if _kernels_cy is None:
            raise ImportError("compiled kernel not built; reinstall with a C compiler")
        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}; expected cython or numpy")


def _select():
    requested = os.environ.get("HERDSIM_BACKEND")
    if requested:
        return get_backend(requested)
    return _kernels_cy if _kernels_cy is not None else _kernels_np


active = _select()
