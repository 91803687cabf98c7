"""Kernel backend selection: numba-jitted loops or pure numpy.

PATS_NUMBA=0 forces the numpy path, PATS_NUMBA=1 requires numba
(ImportError if unavailable); unset/auto prefers numba when importable.
The choice is made once at import time.
"""

from __future__ import annotations

import os

from . import _numpy_impl

DESC_DIM = _numpy_impl.DESC_DIM

_pref = os.environ.get("PATS_NUMBA", "").strip().lower()
if _pref in {"0", "false", "off", "no"}:
    _impl = _numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import _numba_impl as _impl  # type: ignore[no-redef]

        BACKEND = "numba"
    except ImportError:
        if _pref in {"1", "true", "on", "yes"}:
            raise ImportError("PATS_NUMBA=1 but numba is not importable")
        _impl = _numpy_impl
        BACKEND = "numpy"

sinkhorn_log = _impl.sinkhorn_log
bilinear_sample = _impl.bilinear_sample
patch_descriptors = _impl.patch_descriptors

__all__ = ["BACKEND", "DESC_DIM", "sinkhorn_log", "bilinear_sample", "patch_descriptors"]
