"""Stream filters. Only FlateDecode and ASCIIHexDecode are supported."""

from __future__ import annotations

import zlib

from docforge.errors import CorruptStream, UnsupportedFilter
from docforge.pdf.objects import Stream, _decode_hex

SUPPORTED = ("FlateDecode", "Fl", "ASCIIHexDecode", "AHx")


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, list):
        return value
    return [value]


def flate_decode(data: bytes) -> bytes:
    d = zlib.decompressobj()
    try:
        out = d.decompress(data)
        out += d.flush()
    except zlib.error as exc:
        raise CorruptStream(f"flate data is corrupt: {exc}") from exc
    if not d.eof:
        raise CorruptStream("flate data is truncated")
    return out


def ascii_hex_decode(data: bytes) -> bytes:
    end = data.find(b">")
    if end >= 0:
        data = data[:end]
    return _decode_hex(data)


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def png_unpredict(data: bytes, columns: int, colors: int = 1, bpc: int = 8) -> bytes:
    bpp = max(1, (colors * bpc + 7) // 8)
    row_len = (columns * colors * bpc + 7) // 8
    out = bytearray()
    prev = bytearray(row_len)
    pos = 0
    while pos < len(data):
        ftype = data[pos]
        row = bytearray(data[pos + 1 : pos + 1 + row_len])
        pos += 1 + row_len
        if len(row) < row_len:
            row.extend(b"\0" * (row_len - len(row)))
        if ftype == 1:
            for i in range(bpp, row_len):
                row[i] = (row[i] + row[i - bpp]) & 0xFF
        elif ftype == 2:
            for i in range(row_len):
                row[i] = (row[i] + prev[i]) & 0xFF
        elif ftype == 3:
            for i in range(row_len):
                left = row[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + ((left + prev[i]) >> 1)) & 0xFF
        elif ftype == 4:
            for i in range(row_len):
                left = row[i - bpp] if i >= bpp else 0
                upleft = prev[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + _paeth(left, prev[i], upleft)) & 0xFF
        elif ftype != 0:
            raise CorruptStream(f"unknown PNG predictor row type {ftype}")
        out += row
        prev = row
    return bytes(out)


def _apply_predictor(data: bytes, parms) -> bytes:
    if not isinstance(parms, dict):
        return data
    predictor = parms.get("Predictor", 1)
    if not isinstance(predictor, int) or predictor == 1:
        return data
    columns = parms.get("Columns", 1)
    colors = parms.get("Colors", 1)
    bpc = parms.get("BitsPerComponent", 8)
    if predictor >= 10:
        return png_unpredict(data, columns, colors, bpc)
    raise UnsupportedFilter(f"predictor {predictor} is not supported")


def decode_stream(stream: Stream, resolve=lambda x: x) -> bytes:
    """Return the decoded bytes of ``stream`` (cached on the object).

    Raises ``UnsupportedFilter`` for filters other than Flate/ASCIIHex and
    ``CorruptStream`` for undecodable data.
    """
    if stream._decoded is not None:
        return stream._decoded
    filters = [resolve(f) for f in _as_list(resolve(stream.get("Filter")))]
    parms = [resolve(p) for p in _as_list(resolve(stream.get("DecodeParms")))]
    data = stream.raw
    for i, name in enumerate(filters):
        parm = parms[i] if i < len(parms) else None
        if name in ("FlateDecode", "Fl"):
            data = _apply_predictor(flate_decode(data), parm)
        elif name in ("ASCIIHexDecode", "AHx"):
            data = ascii_hex_decode(data)
        else:
            raise UnsupportedFilter(f"unsupported filter /{name}")
    stream._decoded = data
    return data
