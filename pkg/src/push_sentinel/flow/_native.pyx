# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled block-matching core.

Same contract as push_sentinel.flow._pure.block_match: per-pixel argmin-SAD
over a pre-sorted displacement list, zero-padded borders, strict-improvement
updates so the first displacement in scan order wins ties.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def block_match(const cnp.uint8_t[:, :, ::1] prev, const cnp.uint8_t[:, :, ::1] nxt,
                int search_radius, int block_size, const cnp.int32_t[:, ::1] disps):
    cdef Py_ssize_t h = prev.shape[0]
    cdef Py_ssize_t w = prev.shape[1]
    cdef Py_ssize_t c = prev.shape[2]
    cdef int b = block_size
    cdef int b2 = block_size // 2
    cdef int r = search_radius
    cdef int pad = r + b2
    cdef Py_ssize_t eh = h + 2 * b2   # extent of the diff plane
    cdef Py_ssize_t ew = w + 2 * b2

    p_arr = np.zeros((h + 2 * pad, w + 2 * pad, c), dtype=np.int16)
    q_arr = np.zeros_like(p_arr)
    p_arr[pad:pad + h, pad:pad + w] = np.asarray(prev)
    q_arr[pad:pad + h, pad:pad + w] = np.asarray(nxt)

    cdef cnp.int16_t[:, :, ::1] p = p_arr
    cdef cnp.int16_t[:, :, ::1] q = q_arr

    diff_arr = np.empty((eh, ew), dtype=np.int32)
    vsum_arr = np.empty((h, ew), dtype=np.int32)
    cost_arr = np.full((h, w), np.iinfo(np.int32).max, dtype=np.int32)
    u_arr = np.zeros((h, w), dtype=np.int32)
    v_arr = np.zeros((h, w), dtype=np.int32)

    cdef cnp.int32_t[:, ::1] diff = diff_arr
    cdef cnp.int32_t[:, ::1] vsum = vsum_arr
    cdef cnp.int32_t[:, ::1] best_cost = cost_arr
    cdef cnp.int32_t[:, ::1] best_u = u_arr
    cdef cnp.int32_t[:, ::1] best_v = v_arr

    cdef Py_ssize_t di, y, x, ch
    cdef int u, v
    cdef cnp.int32_t s, acc
    cdef cnp.int16_t d

    with nogil:
        for di in range(disps.shape[0]):
            u = disps[di, 0]
            v = disps[di, 1]

            # channel-summed absolute difference, prev vs. shifted next
            for y in range(eh):
                for x in range(ew):
                    s = 0
                    for ch in range(c):
                        d = p[y + r, x + r, ch] - q[y + r + v, x + r + u, ch]
                        s += d if d >= 0 else -d
                    diff[y, x] = s

            # vertical sliding window of height b
            for x in range(ew):
                s = 0
                for y in range(b):
                    s += diff[y, x]
                vsum[0, x] = s
            for y in range(1, h):
                for x in range(ew):
                    vsum[y, x] = vsum[y - 1, x] + diff[y + b - 1, x] - diff[y - 1, x]

            # horizontal sliding window of width b, fused with the update
            for y in range(h):
                acc = 0
                for x in range(b):
                    acc += vsum[y, x]
                if acc < best_cost[y, 0]:
                    best_cost[y, 0] = acc
                    best_u[y, 0] = u
                    best_v[y, 0] = v
                for x in range(1, w):
                    acc += vsum[y, x + b - 1] - vsum[y, x - 1]
                    if acc < best_cost[y, x]:
                        best_cost[y, x] = acc
                        best_u[y, x] = u
                        best_v[y, x] = v

    return np.stack([u_arr, v_arr], axis=-1)
