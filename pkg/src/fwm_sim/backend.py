"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``FWM_SIM_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

try:
    if os.environ.get("FWM_SIM_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

COMPILED = _compiled is not None
NAME = "cython" if COMPILED else "numpy"

_impl = _compiled if COMPILED else _fallback
block_tridiag_solve = _impl.block_tridiag_solve
rk4_bloch = _impl.rk4_bloch


def get(name: str):
    """Return the kernel module for ``"cython"`` or ``"numpy"``."""
    if name == "numpy":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def default_threads() -> int:
    env = os.environ.get("FWM_SIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
