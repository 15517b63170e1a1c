"""Kernel selection: compiled Cython core if importable, NumPy otherwise.

Set ``MIXEDORDER_BACKEND=python`` to force the fallback and
``MIXEDORDER_THREADS`` to cap the number of OpenMP threads used by the
compiled kernels.
"""

import os

from . import _expm_py

_forced = os.environ.get("MIXEDORDER_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _expm_py
else:
    try:
        from . import _expm_core as _impl
    except ImportError:  # extension not built
        if _forced == "cython":
            raise
        _impl = _expm_py

BACKEND = _impl.BACKEND


def thread_count():
    """Thread cap from ``MIXEDORDER_THREADS`` (default: all CPUs)."""
    raw = os.environ.get("MIXEDORDER_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def expm_batch(A, limit=1e4):
    return _impl.expm_batch(A, limit, thread_count())


def expm_apply_batch(A, v, limit=1e4):
    return _impl.expm_apply_batch(A, v, limit, thread_count())
