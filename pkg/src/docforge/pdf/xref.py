"""Cross-reference resolution: classic tables, xref streams, object streams.

``decode_object_graph`` loads every object listed in the cross-reference
data into an ``ObjectGraph``. When the cross-reference data is missing or
broken, the file is scanned once for ``N G obj`` headers before giving up.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from docforge.errors import CorruptStream, CorruptXref, EncryptedPdf, NotAPdf, UnsupportedFilter
from docforge.pdf.filters import decode_stream
from docforge.pdf.objects import Lexer, PdfSyntaxError, Ref, Stream, parse_indirect

log = logging.getLogger(__name__)

_STARTXREF_RE = re.compile(rb"startxref\s+(\d+)")
_OBJ_SCAN_RE = re.compile(rb"(?<![0-9])(\d+)\s+(\d+)\s+obj\b")
_XREF_ROW_RE = re.compile(rb"(\d{1,10})\s+(\d{1,5})\s+([nf])")
_SUBSECTION_RE = re.compile(rb"\s*(\d+)\s+(\d+)\s*(?=[\r\n])")


@dataclass
class ObjectGraph:
    """Decoded object table of one PDF file.

    ``objects`` maps object number to its value; streams keep their raw
    bytes and are decoded on first request through ``stream_data``.
    """

    objects: dict[int, Any] = field(default_factory=dict)
    trailer: dict = field(default_factory=dict)
    version: str = ""
    warnings: list[str] = field(default_factory=list)
    reconstructed: bool = False

    def resolve(self, value: Any, depth: int = 0) -> Any:
        while isinstance(value, Ref):
            depth += 1
            if depth > 32:
                return None
            value = self.objects.get(value.num)
        return value

    def get(self, num: int) -> Any:
        return self.objects.get(num)

    def stream_data(self, stream: Stream) -> bytes:
        return decode_stream(stream, self.resolve)

    @property
    def root(self) -> Optional[dict]:
        root = self.resolve(self.trailer.get("Root"))
        return root if isinstance(root, dict) else None


def find_header(data: bytes) -> int:
    idx = data.find(b"%PDF-", 0, 1024 + 5)
    if idx < 0:
        raise NotAPdf("no %PDF- header in the first 1024 bytes")
    return idx


def decode_object_graph(data: bytes) -> ObjectGraph:
    base = find_header(data)
    version = data[base + 5 : base + 8].decode("latin-1", "replace")
    graph = ObjectGraph(version=version)
    try:
        entries, trailer = _read_xref_chain(data, base)
        _load_objects(graph, data, entries)
        graph.trailer = trailer
        if graph.root is None:
            raise CorruptXref("trailer /Root does not resolve")
    except (CorruptXref, PdfSyntaxError, CorruptStream, UnsupportedFilter,
            ValueError, IndexError, KeyError, TypeError) as exc:
        graph = ObjectGraph(version=version, reconstructed=True)
        graph.warnings.append(f"cross-reference data unusable ({exc}); rebuilt by scanning")
        _reconstruct(graph, data)
    if graph.trailer.get("Encrypt") is not None:
        raise EncryptedPdf("encrypted PDFs are not supported")
    return graph


# ---------------------------------------------------------------------------
# xref reading
# ---------------------------------------------------------------------------


def _locate(data: bytes, offset: int, base: int) -> int:
    """Accept offsets relative to the file start or to a shifted header."""
    for cand in (offset, offset + base):
        chunk = data[cand : cand + 32].lstrip()
        if chunk.startswith(b"xref") or re.match(rb"\d+\s+\d+\s+obj", chunk):
            return cand
    raise CorruptXref(f"offset {offset} points at neither xref nor object")


def _read_xref_chain(data: bytes, base: int):
    tail = data[-2048:]
    matches = list(_STARTXREF_RE.finditer(tail))
    if not matches:
        raise CorruptXref("startxref not found")
    offset = int(matches[-1].group(1))
    entries: dict[int, tuple] = {}
    trailer: dict = {}
    seen: set[int] = set()
    pending = [offset]
    while pending:
        offset = pending.pop(0)
        if offset in seen:
            continue
        seen.add(offset)
        pos = _locate(data, offset, base)
        if data[pos : pos + 64].lstrip().startswith(b"xref"):
            section, sec_trailer = _read_classic(data, pos)
            hybrid = sec_trailer.get("XRefStm")
            if isinstance(hybrid, int):
                stm_pos = _locate(data, hybrid, base)
                stm_entries, _ = _read_xref_stream(data, stm_pos)
                for k, v in stm_entries.items():
                    section.setdefault(k, v)
        else:
            section, sec_trailer = _read_xref_stream(data, pos)
        for k, v in section.items():
            entries.setdefault(k, v)
        for k, v in sec_trailer.items():
            trailer.setdefault(k, v)
        prev = sec_trailer.get("Prev")
        if isinstance(prev, int):
            pending.append(prev)
    trailer.pop("Prev", None)
    return entries, trailer


def _read_classic(data: bytes, pos: int):
    pos = data.index(b"xref", pos) + 4
    entries: dict[int, tuple] = {}
    while True:
        m = _SUBSECTION_RE.match(data, pos)
        if m is None:
            break
        start, count = int(m.group(1)), int(m.group(2))
        pos = m.end()
        for i in range(count):
            row = _XREF_ROW_RE.search(data, pos, pos + 40)
            if row is None:
                raise CorruptXref(f"bad xref row for object {start + i}")
            pos = row.end()
            off, gen, kind = int(row.group(1)), int(row.group(2)), row.group(3)
            num = start + i
            if kind == b"n" and num not in entries:
                entries[num] = ("n", off, gen)
            elif kind == b"f":
                entries.setdefault(num, ("f", 0, gen))
    tpos = data.find(b"trailer", pos, pos + 256)
    if tpos < 0:
        raise CorruptXref("trailer keyword missing after xref table")
    lex = Lexer(data, tpos + len(b"trailer"))
    trailer = lex.parse_object()
    if not isinstance(trailer, dict):
        raise CorruptXref("trailer is not a dictionary")
    return entries, trailer


def _read_xref_stream(data: bytes, pos: int):
    _, _, obj = parse_indirect(data, pos)
    if not isinstance(obj, Stream) or obj.get("Type") != "XRef":
        raise CorruptXref(f"object at {pos} is not an xref stream")
    raw = decode_stream(obj)
    widths = obj.get("W")
    if not (isinstance(widths, list) and len(widths) == 3 and all(isinstance(w, int) for w in widths)):
        raise CorruptXref("xref stream /W is malformed")
    size = obj.get("Size", 0)
    index = obj.get("Index") or [0, size]
    w1, w2, w3 = widths
    rec = w1 + w2 + w3
    entries: dict[int, tuple] = {}
    p = 0
    for start, count in zip(index[0::2], index[1::2]):
        for i in range(count):
            if p + rec > len(raw):
                raise CorruptXref("xref stream data is shorter than /Index promises")
            f1 = int.from_bytes(raw[p : p + w1], "big") if w1 else 1
            f2 = int.from_bytes(raw[p + w1 : p + w1 + w2], "big")
            f3 = int.from_bytes(raw[p + w1 + w2 : p + rec], "big")
            p += rec
            num = start + i
            if num in entries:
                continue
            if f1 == 1:
                entries[num] = ("n", f2, f3)
            elif f1 == 2:
                entries[num] = ("c", f2, f3)
            else:
                entries[num] = ("f", 0, f3)
    trailer = {k: v for k, v in obj.attrs.items() if k not in ("Type", "W", "Index", "Filter", "DecodeParms", "Length")}
    return entries, trailer


# ---------------------------------------------------------------------------
# object loading
# ---------------------------------------------------------------------------


def _load_objects(graph: ObjectGraph, data: bytes, entries: dict[int, tuple]) -> None:
    offsets = {num: e for num, e in entries.items() if e[0] == "n"}

    def resolve_length(ref: Ref):
        if ref.num in graph.objects:
            return graph.resolve(ref)
        e = offsets.get(ref.num)
        if e is None:
            return None
        _, _, val = parse_indirect(data, e[1])
        return val

    for num in sorted(offsets):
        _, off, _ = offsets[num]
        got_num, _, value = parse_indirect(data, off, resolve_length)
        if got_num != num:
            raise CorruptXref(f"xref offset for object {num} points at object {got_num}")
        graph.objects[num] = value

    compressed = sorted((num, e) for num, e in entries.items() if e[0] == "c")
    cache: dict[int, dict[int, Any]] = {}
    for num, (_, stm_num, idx) in compressed:
        if stm_num not in cache:
            stm = graph.objects.get(stm_num)
            if not isinstance(stm, Stream):
                raise CorruptXref(f"object stream {stm_num} is missing")
            cache[stm_num] = _unpack_object_stream(graph, stm)
        objs = cache[stm_num]
        if num in objs:
            graph.objects[num] = objs[num]
        else:
            graph.warnings.append(f"object {num} missing from object stream {stm_num}")


def _unpack_object_stream(graph: ObjectGraph, stm: Stream) -> dict[int, Any]:
    data = graph.stream_data(stm)
    n = graph.resolve(stm.get("N"))
    first = graph.resolve(stm.get("First"))
    if not isinstance(n, int) or not isinstance(first, int):
        raise CorruptXref("object stream lacks /N or /First")
    lex = Lexer(data)
    header = []
    for _ in range(n):
        num = lex.parse_object()
        off = lex.parse_object()
        if not isinstance(num, int) or not isinstance(off, int):
            raise CorruptXref("object stream header is malformed")
        header.append((num, off))
    out: dict[int, Any] = {}
    for num, off in header:
        out[num] = Lexer(data, first + off).parse_object()
    return out


def _reconstruct(graph: ObjectGraph, data: bytes) -> None:
    found: dict[int, int] = {}
    for m in _OBJ_SCAN_RE.finditer(data):
        found[int(m.group(1))] = m.start()  # later definitions win
    if not found:
        raise CorruptXref("no cross-reference data and no objects found")

    def resolve_length(ref: Ref):
        off = found.get(ref.num)
        if off is None:
            return None
        try:
            return parse_indirect(data, off)[2]
        except PdfSyntaxError:
            return None

    for num in sorted(found):
        try:
            _, _, value = parse_indirect(data, found[num], resolve_length)
        except PdfSyntaxError as exc:
            graph.warnings.append(f"object {num} skipped during rebuild: {exc}")
            continue
        graph.objects[num] = value

    xref_streams = []
    for num, value in sorted(graph.objects.items()):
        if isinstance(value, Stream) and value.get("Type") == "ObjStm":
            try:
                for inner, obj in _unpack_object_stream(graph, value).items():
                    graph.objects.setdefault(inner, obj)
            except (CorruptXref, CorruptStream, UnsupportedFilter, PdfSyntaxError) as exc:
                graph.warnings.append(f"object stream {num} unreadable: {exc}")
        elif isinstance(value, Stream) and value.get("Type") == "XRef":
            xref_streams.append(value)

    trailer: dict = {}
    tpos = data.rfind(b"trailer")
    while tpos >= 0 and not trailer:
        try:
            cand = Lexer(data, tpos + 7).parse_object()
            if isinstance(cand, dict):
                trailer = cand
        except PdfSyntaxError:
            pass
        tpos = data.rfind(b"trailer", 0, tpos)
    if not trailer and xref_streams:
        trailer = {k: v for k, v in xref_streams[-1].attrs.items() if k in ("Root", "Info", "Encrypt", "ID")}
    graph.trailer = trailer
    if graph.root is None:
        for num, value in sorted(graph.objects.items()):
            if isinstance(value, dict) and value.get("Type") == "Catalog":
                graph.trailer = dict(trailer, Root=Ref(num, 0))
                break
    if graph.root is None:
        raise CorruptXref("no document catalog found")
