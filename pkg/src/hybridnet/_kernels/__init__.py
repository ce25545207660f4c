"""Kernel backend selection.

Imports the compiled extension when present, otherwise falls back to the
pure numpy implementations.  Set HYBRIDNET_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os

from . import pure

BACKEND = "pure"
_impl = pure

if os.environ.get("HYBRIDNET_PURE") != "1":
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

dijkstra_dist = _impl.dijkstra_dist
hop_limited_multisource = _impl.hop_limited_multisource
popcount_rows = _impl.popcount_rows
flood_round = _impl.flood_round

__all__ = [
    "BACKEND",
    "dijkstra_dist",
    "hop_limited_multisource",
    "popcount_rows",
    "flood_round",
    "pure",
]
