"""Pure-numpy block matching, the fallback for the compiled core.

Produces bit-identical results to push_sentinel.flow._native: integer SAD
costs, the same displacement scan order, strict-improvement updates.
"""

from __future__ import annotations

import numpy as np


def _window_sums(plane: np.ndarray, block: int) -> np.ndarray:
    """Sums of every block x block window of `plane` (valid positions only)."""
    ii = np.zeros((plane.shape[0] + 1, plane.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = plane.cumsum(axis=0, dtype=np.int64).cumsum(axis=1)
    return ii[block:, block:] - ii[:-block, block:] - ii[block:, :-block] + ii[:-block, :-block]


def block_match(prev: np.ndarray, nxt: np.ndarray, search_radius: int,
                block_size: int, disps: np.ndarray) -> np.ndarray:
    """Per-pixel argmin-SAD displacement search.

    Both images are conceptually zero-padded; the SAD between the
    block_size x block_size neighborhoods of (x, y) in `prev` and
    (x+u, y+v) in `nxt` is minimized over the displacements in `disps`,
    which arrive pre-sorted so that the first strict minimum wins ties.
    """
    h, w = prev.shape[:2]
    b2 = block_size // 2
    r = search_radius
    pad = r + b2

    spec = [(pad, pad), (pad, pad), (0, 0)]
    p = np.pad(prev.astype(np.int16), spec)
    q = np.pad(nxt.astype(np.int16), spec)
    base = p[r:r + h + 2 * b2, r:r + w + 2 * b2]

    best_cost = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    best_u = np.zeros((h, w), dtype=np.int32)
    best_v = np.zeros((h, w), dtype=np.int32)

    for u, v in disps:
        shifted = q[r + v:r + v + h + 2 * b2, r + u:r + u + w + 2 * b2]
        diff = np.abs(base - shifted).sum(axis=2, dtype=np.int64)
        sad = _window_sums(diff, block_size)
        better = sad < best_cost
        best_cost[better] = sad[better]
        best_u[better] = u
        best_v[better] = v

    return np.stack([best_u, best_v], axis=-1)
