"""Picks the compiled counting kernel when it is built, else the pure-Python one.

Set ``MRREFINE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from mrrefine.arm import _fallback

if os.environ.get("MRREFINE_PURE_PYTHON", "") not in ("", "0"):
    TidsetIndex = _fallback.TidsetIndex
    BACKEND = "python"
else:
    try:
        from mrrefine.arm._kernels import TidsetIndex  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        TidsetIndex = _fallback.TidsetIndex
        BACKEND = "python"

BACKENDS = {"python": _fallback.TidsetIndex}
try:
    from mrrefine.arm._kernels import TidsetIndex as _CompiledIndex

    BACKENDS["cython"] = _CompiledIndex
except ImportError:
    pass
