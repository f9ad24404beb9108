"""Selects the compiled sampling kernels, falling back to pure numpy.

Set MTSS_FORCE_FALLBACK=1 to skip the compiled extension (benchmarking, or
diagnosing a suspected kernel issue).  Both implementations honor the same
stream contract, so switching backends never changes round counts.
"""

from __future__ import annotations

import os

if os.environ.get("MTSS_FORCE_FALLBACK"):
    from mtss.simulate import _fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from mtss.simulate import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from mtss.simulate import _fallback as _impl  # type: ignore[no-redef]

        BACKEND = "fallback"

stable_round = _impl.stable_round
tss_round = _impl.tss_round

__all__ = ["BACKEND", "stable_round", "tss_round"]
