"""Kernel selection: the compiled Gillespie loop when the extension
built, else the numpy one.  STRANDREC_PURE_PYTHON=1 forces the
fallback."""

from __future__ import annotations

import os

from . import _ssa_py

if os.environ.get("STRANDREC_PURE_PYTHON"):
    _impl = _ssa_py
    KERNEL = "python"
else:
    try:
        from . import _ssa_core as _impl  # type: ignore[no-redef]

        KERNEL = "compiled"
    except ImportError:
        _impl = _ssa_py
        KERNEL = "python"

STATUS_NEED_UNIFORMS = 0
STATUS_QUIESCENT = 1
STATUS_BUDGET = 2

run_chunk = _impl.run_chunk


def implementations():
    """Both kernels, for parity tests and benchmarks."""
    out = {"python": _ssa_py.run_chunk}
    try:
        from . import _ssa_core

        out["compiled"] = _ssa_core.run_chunk
    except ImportError:
        pass
    return out
