"""Hot-loop kernels with a compiled fast path and a numpy fallback.

The backend is picked once at import time: the compiled extension when it
built successfully, numpy otherwise.  Set ``RANKDP_KERNELS=python`` or
``RANKDP_KERNELS=c`` to force a backend (``c`` raises if the extension is
missing).  Both backends compute identical results; see
``benchmarks/bench_kernels.py`` for the speed comparison.
"""

import os

from . import _numpy

_choice = os.environ.get("RANKDP_KERNELS", "auto").lower()

if _choice not in ("auto", "c", "python"):
    raise ValueError(f"RANKDP_KERNELS must be auto, c, or python; got {_choice!r}")

if _choice == "python":
    _impl = _numpy
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        _impl = _numpy
        BACKEND = "python"

decode_insertion_codes = _impl.decode_insertion_codes
concordance_counts = _impl.concordance_counts
pair_greater_counts = _impl.pair_greater_counts

__all__ = [
    "BACKEND",
    "decode_insertion_codes",
    "concordance_counts",
    "pair_greater_counts",
]
