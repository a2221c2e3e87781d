"""Huffman entropy kernels for the baseline JPEG scan layer.

Hot loops only; marker parsing, DCT and quantization live in
:mod:`hdrpack.jpeg`. Everything here is integer arithmetic on numpy
arrays so the compiled code is deterministic across platforms.
"""

import numpy as np
from numba import njit

OK = 0
ERR_TRUNCATED = 1
ERR_BAD_CODE = 2
ERR_RUN_OVERFLOW = 3


@njit(inline="always")
def _nbits_of(v):
    n = 0
    while v:
        v >>= 1
        n += 1
    return n


@njit(inline="always")
def _put(out, pos, acc, nbits, code, size):
    # MSB-first writer with 0xFF byte stuffing.
    acc = (acc << size) | code
    nbits += size
    while nbits >= 8:
        nbits -= 8
        b = (acc >> nbits) & 0xFF
        out[pos] = b
        pos += 1
        if b == 0xFF:
            out[pos] = 0
            pos += 1
    return pos, acc & ((1 << nbits) - 1), nbits


@njit(cache=True, nogil=True)
def encode_scan(
    zz, comp_of_block, table_of_comp, dc_codes, dc_sizes, ac_codes, ac_sizes, out
):
    """Encode quantized zigzag blocks into ``out``; returns byte count.

    ``zz`` is int32[nblocks, 64] in MCU-interleaved order; the caller
    sizes ``out`` for the worst case so no bounds checks are needed here.
    """
    nblocks = zz.shape[0]
    preds = np.zeros(4, dtype=np.int64)
    acc = 0
    nbits = 0
    pos = 0
    for i in range(nblocks):
        comp = comp_of_block[i]
        tbl = table_of_comp[comp]
        dc = np.int64(zz[i, 0])
        diff = dc - preds[comp]
        preds[comp] = dc
        mag = diff if diff >= 0 else -diff
        s = _nbits_of(mag)
        pos, acc, nbits = _put(out, pos, acc, nbits, dc_codes[tbl, s], dc_sizes[tbl, s])
        if s > 0:
            v = diff if diff >= 0 else diff + (1 << s) - 1
            pos, acc, nbits = _put(out, pos, acc, nbits, v, s)
        run = 0
        for k in range(1, 64):
            val = np.int64(zz[i, k])
            if val == 0:
                run += 1
                continue
            while run > 15:
                pos, acc, nbits = _put(
                    out, pos, acc, nbits, ac_codes[tbl, 0xF0], ac_sizes[tbl, 0xF0]
                )
                run -= 16
            mag = val if val >= 0 else -val
            s = _nbits_of(mag)
            sym = (run << 4) | s
            pos, acc, nbits = _put(
                out, pos, acc, nbits, ac_codes[tbl, sym], ac_sizes[tbl, sym]
            )
            v = val if val >= 0 else val + (1 << s) - 1
            pos, acc, nbits = _put(out, pos, acc, nbits, v, s)
            run = 0
        if run > 0:
            pos, acc, nbits = _put(
                out, pos, acc, nbits, ac_codes[tbl, 0], ac_sizes[tbl, 0]
            )
    if nbits > 0:  # pad to byte boundary with 1-bits
        pad = 8 - nbits
        pos, acc, nbits = _put(out, pos, acc, nbits, (1 << pad) - 1, pad)
    return pos


@njit(inline="always")
def _fill(data, pos, acc, nbits):
    # Pull whole bytes, undoing 0xFF00 stuffing; never consumes a marker.
    nd = data.shape[0]
    while nbits < 24:
        if pos >= nd:
            break
        b = data[pos]
        if b == 0xFF:
            if pos + 1 < nd and data[pos + 1] == 0x00:
                pos += 2
                acc = (acc << 8) | 0xFF
                nbits += 8
            else:
                break
        else:
            pos += 1
            acc = (acc << 8) | np.int64(b)
            nbits += 8
    return pos, acc, nbits


@njit(inline="always")
def _peek16(acc, nbits):
    if nbits >= 16:
        return (acc >> (nbits - 16)) & 0xFFFF
    return (acc << (16 - nbits)) & 0xFFFF


@njit(cache=True, nogil=True)
def decode_scan(
    data, out, comp_of_block, table_of_comp, dc_sym, dc_len, ac_sym, ac_len
):
    """Decode ``out.shape[0]`` blocks from ``data``.

    Returns (status, pos) where pos is the offset of the first unread
    byte (the next marker for a well-formed stream). ``out`` must be
    zero-initialized int32[nblocks, 64]; coefficients land in zigzag
    order.
    """
    nblocks = out.shape[0]
    preds = np.zeros(4, dtype=np.int64)
    pos = 0
    acc = np.int64(0)
    nbits = 0
    for i in range(nblocks):
        comp = comp_of_block[i]
        tbl = table_of_comp[comp]
        # DC symbol
        pos, acc, nbits = _fill(data, pos, acc, nbits)
        peek = _peek16(acc, nbits)
        length = dc_len[tbl, peek]
        if length == 0:
            return ERR_BAD_CODE, pos
        if length > nbits:
            return ERR_TRUNCATED, pos
        s = np.int64(dc_sym[tbl, peek])
        nbits -= length
        acc &= (1 << nbits) - 1
        if s > 16:
            return ERR_BAD_CODE, pos
        diff = np.int64(0)
        if s > 0:
            pos, acc, nbits = _fill(data, pos, acc, nbits)
            if nbits < s:
                return ERR_TRUNCATED, pos
            v = (acc >> (nbits - s)) & ((1 << s) - 1)
            nbits -= s
            acc &= (1 << nbits) - 1
            if v < (1 << (s - 1)):
                v -= (1 << s) - 1
            diff = v
        preds[comp] += diff
        out[i, 0] = preds[comp]
        # AC coefficients
        k = 1
        while k < 64:
            pos, acc, nbits = _fill(data, pos, acc, nbits)
            peek = _peek16(acc, nbits)
            length = ac_len[tbl, peek]
            if length == 0:
                return ERR_BAD_CODE, pos
            if length > nbits:
                return ERR_TRUNCATED, pos
            sym = ac_sym[tbl, peek]
            nbits -= length
            acc &= (1 << nbits) - 1
            run = sym >> 4
            s = np.int64(sym & 0x0F)
            if s == 0:
                if sym == 0x00:  # end of block
                    break
                if sym == 0xF0:  # sixteen zeros
                    k += 16
                    if k > 63:
                        return ERR_RUN_OVERFLOW, pos
                    continue
                return ERR_BAD_CODE, pos  # EOBn is not baseline
            k += run
            if k > 63:
                return ERR_RUN_OVERFLOW, pos
            pos, acc, nbits = _fill(data, pos, acc, nbits)
            if nbits < s:
                return ERR_TRUNCATED, pos
            v = (acc >> (nbits - s)) & ((1 << s) - 1)
            nbits -= s
            acc &= (1 << nbits) - 1
            if v < (1 << (s - 1)):
                v -= (1 << s) - 1
            out[i, k] = v
            k += 1
    return OK, pos
