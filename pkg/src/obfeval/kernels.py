"""Kernel backend selection.

Imports the compiled extension when available and falls back to the numpy
implementation otherwise. Set OBFEVAL_PURE=1 to force the fallback (used
by the benchmark and to test both paths).
"""

import os

if os.environ.get("OBFEVAL_PURE", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
ba_iterate = _impl.ba_iterate
mutual_information_bits = _impl.mutual_information_bits
