"""Kernel selection for the block-matching hot loop.

The compiled core (push_sentinel.flow._native, built from _native.pyx) is
used when importable; otherwise the pure-numpy fallback takes over. Both
produce identical integer displacement fields. Set PUSH_SENTINEL_PURE=1 to
force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from push_sentinel.flow import _pure

__all__ = ["BACKEND", "HAVE_NATIVE", "block_match", "displacement_order"]

try:
    from push_sentinel.flow import _native
except ImportError:
    _native = None

HAVE_NATIVE = _native is not None
_FORCE_PURE = os.environ.get("PUSH_SENTINEL_PURE", "") not in ("", "0")
BACKEND = "native" if HAVE_NATIVE and not _FORCE_PURE else "pure"


@lru_cache(maxsize=16)
def displacement_order(search_radius: int) -> np.ndarray:
    """All displacements with |u|,|v| <= radius, in tie-breaking scan order.

    Sorted by (|u|+|v|, v, u) so that a strict-improvement argmin scan
    resolves equal costs to the smallest |u|+|v|, then smallest v, then
    smallest u. (0, 0) always comes first.
    """
    disps = [(u, v)
             for v in range(-search_radius, search_radius + 1)
             for u in range(-search_radius, search_radius + 1)]
    disps.sort(key=lambda d: (abs(d[0]) + abs(d[1]), d[1], d[0]))
    arr = np.array(disps, dtype=np.int32)
    arr.setflags(write=False)
    return arr


def _validate(prev: np.ndarray, nxt: np.ndarray, search_radius: int, block_size: int):
    if prev.ndim != 3 or nxt.ndim != 3:
        raise ValueError("images must be HxWxC arrays")
    if prev.shape != nxt.shape:
        raise ValueError(f"image shapes differ: {prev.shape} vs {nxt.shape}")
    if prev.dtype != np.uint8 or nxt.dtype != np.uint8:
        raise ValueError("images must be uint8")
    if search_radius < 1:
        raise ValueError("search_radius must be >= 1")
    if block_size < 3 or block_size % 2 == 0:
        raise ValueError("block_size must be odd and >= 3")


def block_match(prev: np.ndarray, nxt: np.ndarray, search_radius: int = 8,
                block_size: int = 7, backend: str | None = None) -> np.ndarray:
    """Integer (u, v) displacement per pixel, shape (h, w, 2), int32.

    `backend` overrides the import-time selection ("native" or "pure");
    used by the benchmark and the equivalence tests.
    """
    _validate(prev, nxt, search_radius, block_size)
    disps = displacement_order(search_radius)
    chosen = backend or BACKEND
    if chosen == "native":
        if _native is None:
            raise RuntimeError("native kernel requested but not built")
        return _native.block_match(np.ascontiguousarray(prev),
                                   np.ascontiguousarray(nxt),
                                   search_radius, block_size, disps)
    if chosen == "pure":
        return _pure.block_match(prev, nxt, search_radius, block_size, disps)
    raise ValueError(f"unknown backend {chosen!r}")
