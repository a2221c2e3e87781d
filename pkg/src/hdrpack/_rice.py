"""Numba kernels for the MED-predicted adaptive Rice backend.

Scan order is raster; prediction is the median-edge detector over causal
neighbors (left-only on the first row, above-only in the first column,
zero at the origin). Prediction errors are zigzag-mapped to unsigned and
Rice-coded with a per-plane adaptive parameter: running sum/count of the
mapped values start at 4/1 and k is the bit length of their quotient,
capped at 24. Quotients of 24 or more escape to 24 one-bits followed by
the raw 32-bit value. Streams are padded to a byte with zero bits.
"""

import numpy as np
from numba import njit

OK = 0
ERR_TRUNCATED = 1

_Q_LIMIT = 24
_K_CAP = 24


@njit(inline="always")
def _putbits(out, pos, acc, nbits, code, size):
    acc = (acc << size) | code
    nbits += size
    while nbits >= 8:
        nbits -= 8
        out[pos] = (acc >> nbits) & 0xFF
        pos += 1
    return pos, acc & ((np.int64(1) << nbits) - 1), nbits


@njit(inline="always")
def _getbits(data, pos, acc, nbits, count):
    nd = data.shape[0]
    while nbits < count:
        if pos >= nd:
            return pos, acc, nbits, np.int64(0), False
        acc = (acc << 8) | np.int64(data[pos])
        pos += 1
        nbits += 8
    v = (acc >> (nbits - count)) & ((np.int64(1) << count) - 1)
    nbits -= count
    acc &= (np.int64(1) << nbits) - 1
    return pos, acc, nbits, v, True


@njit(inline="always")
def _med(a, b, c):
    mn = a if a < b else b
    mx = a if a > b else b
    if c <= mn:
        return mx
    if c >= mx:
        return mn
    return a + b - c


@njit(inline="always")
def _predict(plane, y, x):
    if y == 0:
        return plane[y, x - 1] if x > 0 else np.int64(0)
    if x == 0:
        return plane[y - 1, x]
    return _med(plane[y, x - 1], plane[y - 1, x], plane[y - 1, x - 1])


@njit(cache=True, nogil=True)
def rice_encode(plane, out):
    """Encode a non-negative int64 plane; returns the byte count.

    ``out`` must hold the worst case (8 bytes per sample plus slack).
    """
    h, w = plane.shape
    acc = np.int64(0)
    nbits = 0
    pos = 0
    a_sum = np.int64(4)
    n_cnt = np.int64(1)
    for y in range(h):
        for x in range(w):
            e = plane[y, x] - _predict(plane, y, x)
            u = (e << 1) if e >= 0 else ((-e << 1) - 1)
            m = a_sum // n_cnt
            k = 0
            while m > 0:
                m >>= 1
                k += 1
            if k > _K_CAP:
                k = _K_CAP
            q = u >> k
            if q < _Q_LIMIT:
                pos, acc, nbits = _putbits(
                    out, pos, acc, nbits, ((np.int64(1) << q) - 1) << 1, q + 1
                )
                if k > 0:
                    pos, acc, nbits = _putbits(
                        out, pos, acc, nbits, u & ((np.int64(1) << k) - 1), k
                    )
            else:
                pos, acc, nbits = _putbits(
                    out, pos, acc, nbits, (np.int64(1) << _Q_LIMIT) - 1, _Q_LIMIT
                )
                pos, acc, nbits = _putbits(out, pos, acc, nbits, u, 32)
            a_sum += u
            n_cnt += 1
    if nbits > 0:
        out[pos] = (acc << (8 - nbits)) & 0xFF
        pos += 1
    return pos


@njit(cache=True, nogil=True)
def rice_decode(data, out):
    """Decode into ``out`` (int64); returns (status, consumed_bytes)."""
    h, w = out.shape
    acc = np.int64(0)
    nbits = 0
    pos = 0
    a_sum = np.int64(4)
    n_cnt = np.int64(1)
    for y in range(h):
        for x in range(w):
            m = a_sum // n_cnt
            k = 0
            while m > 0:
                m >>= 1
                k += 1
            if k > _K_CAP:
                k = _K_CAP
            q = 0
            while True:
                pos, acc, nbits, bit, ok = _getbits(data, pos, acc, nbits, 1)
                if not ok:
                    return ERR_TRUNCATED, pos
                if bit == 0:
                    break
                q += 1
                if q == _Q_LIMIT:
                    break
            if q == _Q_LIMIT:
                pos, acc, nbits, u, ok = _getbits(data, pos, acc, nbits, 32)
                if not ok:
                    return ERR_TRUNCATED, pos
            else:
                pos, acc, nbits, r, ok = _getbits(data, pos, acc, nbits, k)
                if not ok:
                    return ERR_TRUNCATED, pos
                u = (np.int64(q) << k) | r
            e = (u >> 1) if (u & 1) == 0 else -((u + 1) >> 1)
            out[y, x] = _predict(out, y, x) + e
            a_sum += u
            n_cnt += 1
    return OK, pos
