"""Stepping-backend selection.

Prefers the compiled Cython kernel and falls back to the pure-numpy
implementation when the extension is unavailable.  Set IONQRM_BACKEND to
``python`` or ``compiled`` to force a choice (``compiled`` raises if the
extension cannot be imported).
"""

from __future__ import annotations

import os

from . import _pykernel

_requested = os.environ.get("IONQRM_BACKEND", "").strip().lower()

if _requested in ("", "auto", "compiled"):
    try:
        from . import _kernel as _impl
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "IONQRM_BACKEND=compiled but the ionqrm._kernel extension is "
                "not built; run `pip install -e . --no-build-isolation`"
            )
        _impl = _pykernel
elif _requested in ("python", "py"):
    _impl = _pykernel
else:
    raise ValueError(f"unrecognized IONQRM_BACKEND={_requested!r}")

advance_tones = _impl.advance_tones
advance_constant = _impl.advance_constant
BACKEND_NAME = _impl.BACKEND_NAME


def backend_name() -> str:
    """Name of the active stepping backend ('compiled' or 'python')."""
    return BACKEND_NAME
