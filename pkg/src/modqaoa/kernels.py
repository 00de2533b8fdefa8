"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy fallback is used.  Set ``MODQAOA_KERNEL=python`` or
``MODQAOA_KERNEL=compiled`` to force a backend (forcing ``compiled`` raises
if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("MODQAOA_KERNEL", "").strip().lower()
if _requested not in ("", "compiled", "python"):
    raise RuntimeError(
        f"MODQAOA_KERNEL must be 'compiled' or 'python', got {_requested!r}")

if _requested == "python":
    _impl = _kernels_py
    _backend = "python"
else:
    try:
        from . import _kernels as _impl_compiled
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _kernels_py
        _backend = "python"
    else:
        _impl = _impl_compiled
        _backend = "compiled"

evolve = _impl.evolve
expectation = _impl.expectation


def active_backend() -> str:
    """Name of the kernel backend chosen at import: compiled or python."""
    return _backend
