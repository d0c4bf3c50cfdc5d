"""Kernel dispatch: compiled extension if built, pure fallback otherwise.

Set NEWSEVENTS_PURE=1 to force the fallback (used by the benchmark and the
parity tests).
"""

import os

from . import _pure

if os.environ.get("NEWSEVENTS_PURE") == "1":
    _impl = _pure
    HAVE_SPEEDUPS = False
else:
    try:
        from . import _speedups as _impl

        HAVE_SPEEDUPS = True
    except ImportError:
        _impl = _pure
        HAVE_SPEEDUPS = False

count_matches = _impl.count_matches
hinge_sgd = _impl.hinge_sgd

__all__ = ["count_matches", "hinge_sgd", "HAVE_SPEEDUPS"]
