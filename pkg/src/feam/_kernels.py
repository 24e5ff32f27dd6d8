"""Compiled GF(2) elimination kernels over packed uint64 rows.

Rows are stored as ``(m, W)`` arrays of ``uint64`` words, bit ``c`` of a row
living in word ``c >> 6`` at position ``c & 63``.
"""

from __future__ import annotations

import numba
import numpy as np

_BLOCK = 8  # columns per Four-Russians block; must divide 64


@numba.njit(cache=True, inline="always")
def _bit(M, i, c):
    return (M[i, c >> 6] >> np.uint64(c & 63)) & np.uint64(1)


@numba.njit(cache=True)
def _swap_rows(M, a, b):
    for k in range(M.shape[1]):
        t = M[a, k]
        M[a, k] = M[b, k]
        M[b, k] = t


@numba.njit(cache=True)
def _xor_into(M, dst, src, w0):
    for k in range(w0, M.shape[1]):
        M[dst, k] ^= M[src, k]


@numba.njit(cache=True)
def gauss_jordan(M, ncols):
    """Reduce ``M`` in place to reduced row echelon form on its first ``ncols`` columns.

    Pivot rows end up at the top in column order. Within each block of
    columns the pivot for a column is the lowest-indexed remaining row with
    that bit set after the block's earlier pivots were applied, so the
    result is fully deterministic.

    Returns an int64 array of the pivot columns.
    """
    m, W = M.shape
    pivots = np.empty(min(m, ncols), dtype=np.int64)
    npiv = 0
    r = 0
    table = np.zeros((1 << _BLOCK, W), dtype=np.uint64)
    block_rows = np.empty(_BLOCK, dtype=np.int64)
    block_cols = np.empty(_BLOCK, dtype=np.int64)

    c0 = 0
    while c0 < ncols and r < m:
        c1 = min(c0 + _BLOCK, ncols)
        w = c0 >> 6
        kp = 0
        # Phase 1: find the block's pivots, keeping pivot rows mutually reduced.
        for c in range(c0, c1):
            if r + kp >= m:
                break
            p = -1
            for i in range(r + kp, m):
                # reduce a scratch copy of row i's relevant bit by the block pivots
                val = _bit(M, i, c)
                for t in range(kp):
                    if _bit(M, i, block_cols[t]) == 1:
                        val ^= _bit(M, block_rows[t], c)
                if val == 1:
                    p = i
                    break
            if p < 0:
                continue
            dst = r + kp
            if p != dst:
                _swap_rows(M, p, dst)
            for t in range(kp):
                if _bit(M, dst, block_cols[t]) == 1:
                    _xor_into(M, dst, block_rows[t], w)
            for t in range(kp):
                if _bit(M, block_rows[t], c) == 1:
                    _xor_into(M, block_rows[t], dst, w)
            block_rows[kp] = dst
            block_cols[kp] = c
            kp += 1
        if kp == 0:
            c0 = c1
            continue
        # Phase 2: table of all combinations of the kp pivot rows.
        for k in range(w, W):
            table[0, k] = 0
        for idx in range(1, 1 << kp):
            low = idx & -idx
            t = 0
            while (1 << t) != low:
                t += 1
            prev = idx ^ low
            for k in range(w, W):
                table[idx, k] = table[prev, k] ^ M[block_rows[t], k]
        for i in range(m):
            if i >= r and i < r + kp:
                continue
            idx = 0
            for t in range(kp):
                if _bit(M, i, block_cols[t]) == 1:
                    idx |= 1 << t
            if idx:
                for k in range(w, W):
                    M[i, k] ^= table[idx, k]
        for t in range(kp):
            pivots[npiv] = block_cols[t]
            npiv += 1
        r += kp
        c0 = c1
    return pivots[:npiv]


def pack_rows(rows: list[int], width: int) -> np.ndarray:
    """Pack Python-int bit rows (LSB = column 0) into a ``(m, W)`` uint64 array."""
    nwords = max(1, (width + 63) // 64)
    nbytes = nwords * 8
    buf = b"".join(r.to_bytes(nbytes, "little") for r in rows)
    return np.frombuffer(buf, dtype="<u8").reshape(len(rows), nwords).copy()


def unpack_rows(M: np.ndarray) -> list[int]:
    """Inverse of :func:`pack_rows`."""
    data = np.ascontiguousarray(M, dtype="<u8")
    nbytes = data.shape[1] * 8
    raw = data.tobytes()
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") for i in range(data.shape[0])]
