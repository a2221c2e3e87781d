"""Independent JPEG marker walker used as a structural validator.

Deliberately re-implemented from the marker grammar rather than shared
with the package: it walks the whole stream including the entropy-coded
section (honoring byte stuffing) and returns the marker sequence, raising
ValueError on any structural violation.
"""

MARKER_NAMES = {
    0xC0: "SOF0", 0xC1: "SOF1", 0xC2: "SOF2", 0xC3: "SOF3",
    0xC4: "DHT", 0xC8: "JPG", 0xCC: "DAC",
    0xD8: "SOI", 0xD9: "EOI", 0xDA: "SOS", 0xDB: "DQT",
    0xDC: "DNL", 0xDD: "DRI", 0xDE: "DHP", 0xDF: "EXP",
    0xFE: "COM", 0x01: "TEM",
}
MARKER_NAMES.update({0xC0 + i: f"SOF{i}" for i in (5, 6, 7, 9, 10, 11, 13, 14, 15)})
MARKER_NAMES.update({0xD0 + i: f"RST{i}" for i in range(8)})
MARKER_NAMES.update({0xE0 + i: f"APP{i}" for i in range(16)})
MARKER_NAMES.update({0xF0 + i: f"JPG{i}" for i in range(14)})

_STANDALONE = {0x01} | set(range(0xD0, 0xD8))


def walk_markers(data: bytes) -> list[str]:
    """Return marker names in stream order; ValueError on bad structure."""
    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise ValueError("missing SOI")
    seq = ["SOI"]
    pos = 2
    n = len(data)
    in_scan = False
    while pos < n:
        if in_scan:
            # skip entropy-coded data: FF00 is stuffing, FF D0..D7 restarts
            if data[pos] != 0xFF:
                pos += 1
                continue
            if pos + 1 >= n:
                raise ValueError("dangling FF at end of scan")
            nxt = data[pos + 1]
            if nxt == 0x00:
                pos += 2
                continue
            if 0xD0 <= nxt <= 0xD7:
                seq.append(MARKER_NAMES[nxt])
                pos += 2
                continue
            if nxt == 0xFF:
                pos += 1
                continue
            in_scan = False  # a real marker terminates the scan
            continue
        if data[pos] != 0xFF:
            raise ValueError(f"expected marker at offset {pos}")
        while pos + 1 < n and data[pos + 1] == 0xFF:
            pos += 1
        if pos + 1 >= n:
            raise ValueError("dangling FF at end of stream")
        marker = data[pos + 1]
        if marker == 0x00:
            raise ValueError(f"stuffed byte outside scan at offset {pos}")
        name = MARKER_NAMES.get(marker)
        if name is None:
            raise ValueError(f"unknown marker 0xFF{marker:02X}")
        seq.append(name)
        pos += 2
        if marker == 0xD9:  # EOI
            return seq
        if marker in _STANDALONE:
            continue
        if pos + 2 > n:
            raise ValueError("truncated segment length")
        seglen = (data[pos] << 8) | data[pos + 1]
        if seglen < 2 or pos + seglen > n:
            raise ValueError("segment overruns stream")
        pos += seglen
        if marker == 0xDA:
            in_scan = True
    raise ValueError("no EOI marker")
