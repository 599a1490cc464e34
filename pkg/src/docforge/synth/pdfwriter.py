"""Minimal PDF writer for test fixtures with recorded ground truth.

Every ``PageBuilder.text`` call emits one text run and records where its
first glyph lands, so extraction can be checked against placements that
were known at emission time rather than re-derived from the output.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

from fontTools import agl

from docforge.pdf._std14 import METRICS
from docforge.pdf.encodings import WIN_ANSI
from docforge.pdf.objects import Name, Ref

_WINANSI_CODE = {}
for _code, _glyph in enumerate(WIN_ANSI):
    if _glyph != ".notdef":
        _WINANSI_CODE.setdefault(_glyph, _code)

CID_ASCENT = 718
CID_DESCENT = -207


def _fmt_num(v) -> bytes:
    if isinstance(v, bool):
        return b"true" if v else b"false"
    if isinstance(v, int):
        return str(v).encode()
    text = f"{v:.4f}".rstrip("0").rstrip(".")
    return (text if text not in ("", "-0") else "0").encode()


def _literal(data: bytes) -> bytes:
    out = bytearray(b"(")
    for ch in data:
        if ch in b"()\\":
            out += b"\\" + bytes([ch])
        elif ch == 0x0A:
            out += b"\\n"
        elif ch == 0x0D:
            out += b"\\r"
        elif ch < 32 or ch > 126:
            out += b"\\%03o" % ch
        else:
            out.append(ch)
    out += b")"
    return bytes(out)


def serialize(value) -> bytes:
    if isinstance(value, Ref):
        return b"%d %d R" % (value.num, value.gen)
    if isinstance(value, Name):
        return b"/" + str(value).encode("latin-1")
    if isinstance(value, (bool, int, float)):
        return _fmt_num(value)
    if value is None:
        return b"null"
    if isinstance(value, bytes):
        return _literal(value)
    if isinstance(value, str):
        return _literal(value.encode("latin-1"))
    if isinstance(value, list):
        return b"[" + b" ".join(serialize(v) for v in value) + b"]"
    if isinstance(value, dict):
        parts = [b"/" + k.encode("latin-1") + b" " + serialize(v) for k, v in value.items()]
        return b"<<" + b" ".join(parts) + b">>"
    raise TypeError(f"cannot serialize {type(value).__name__}")


@dataclass
class _StreamObj:
    attrs: dict
    data: bytes


class PdfWriter:
    """Assemble objects into a file.

    ``xref`` selects ``"classic"`` tables, an ``"stream"`` xref stream, or
    ``"objstm"`` (xref stream with non-stream objects packed into one
    object stream).
    """

    def __init__(self, xref: str = "classic", compress: bool = True, version: str = "1.7") -> None:
        if xref not in ("classic", "stream", "objstm"):
            raise ValueError(xref)
        self.xref = xref
        self.compress = compress
        self.version = version
        self.objects: dict[int, object] = {}
        self._next = 1

    def reserve(self) -> Ref:
        ref = Ref(self._next)
        self._next += 1
        return ref

    def put(self, ref: Ref, value) -> Ref:
        self.objects[ref.num] = value
        return ref

    def add(self, value) -> Ref:
        return self.put(self.reserve(), value)

    def add_stream(self, attrs: dict, data: bytes, compress: Optional[bool] = None) -> Ref:
        attrs = dict(attrs)
        if self.compress if compress is None else compress:
            data = zlib.compress(data)
            attrs["Filter"] = Name("FlateDecode")
        return self.add(_StreamObj(attrs, data))

    @staticmethod
    def _object_bytes(num: int, value) -> bytes:
        if isinstance(value, _StreamObj):
            attrs = dict(value.attrs, Length=len(value.data))
            return (
                b"%d 0 obj\n" % num + serialize(attrs) + b"\nstream\n" + value.data + b"\nendstream\nendobj\n"
            )
        return b"%d 0 obj\n" % num + serialize(value) + b"\nendobj\n"

    def build(self, root: Ref, info: Optional[Ref] = None) -> bytes:
        out = bytearray(b"%PDF-" + self.version.encode() + b"\n%\xe2\xe3\xcf\xd3\n")
        offsets: dict[int, tuple] = {}
        objects = dict(self.objects)
        size = self._next

        if self.xref == "objstm":
            packed = [n for n in sorted(objects) if not isinstance(objects[n], _StreamObj)]
            stm_num = size
            size += 1
            body = bytearray()
            header = []
            for idx, n in enumerate(packed):
                header.append(b"%d %d" % (n, len(body)))
                body += serialize(objects.pop(n)) + b"\n"
                offsets[n] = ("c", stm_num, idx)
            head = b" ".join(header) + b"\n"
            data = head + bytes(body)
            attrs = {"Type": Name("ObjStm"), "N": len(packed), "First": len(head)}
            if self.compress:
                data = zlib.compress(data)
                attrs["Filter"] = Name("FlateDecode")
            objects[stm_num] = _StreamObj(attrs, data)

        for n in sorted(objects):
            offsets[n] = ("n", len(out), 0)
            out += self._object_bytes(n, objects[n])

        trailer = {"Size": size, "Root": root}
        if info is not None:
            trailer["Info"] = info
        if self.xref == "classic":
            xref_at = len(out)
            out += b"xref\n0 %d\n0000000000 65535 f \n" % size
            for n in range(1, size):
                kind, off, _ = offsets.get(n, ("f", 0, 0))
                if kind == "n":
                    out += b"%010d 00000 n \n" % off
                else:
                    out += b"0000000000 00001 f \n"
            out += b"trailer\n" + serialize(trailer) + b"\nstartxref\n%d\n%%%%EOF\n" % xref_at
            return bytes(out)

        xref_num = size
        size += 1
        xref_at = len(out)
        offsets[xref_num] = ("n", xref_at, 0)
        rows = bytearray()
        for n in range(size):
            kind, a, b = offsets.get(n, ("f", 0, 0))
            if n == 0:
                rows += bytes([0]) + (0).to_bytes(4, "big") + (65535).to_bytes(2, "big")
            elif kind == "n":
                rows += bytes([1]) + a.to_bytes(4, "big") + b.to_bytes(2, "big")
            elif kind == "c":
                rows += bytes([2]) + a.to_bytes(4, "big") + b.to_bytes(2, "big")
            else:
                rows += bytes([0]) + (0).to_bytes(4, "big") + (1).to_bytes(2, "big")
        attrs = dict(trailer, Size=size, Type=Name("XRef"), W=[1, 4, 2])
        data = bytes(rows)
        if self.compress:
            data = zlib.compress(data)
            attrs["Filter"] = Name("FlateDecode")
        out += self._object_bytes(xref_num, _StreamObj(attrs, data))
        out += b"startxref\n%d\n%%%%EOF\n" % xref_at
        return bytes(out)


# ---------------------------------------------------------------------------
# fonts and pages
# ---------------------------------------------------------------------------


def std_width(font: str, ch: str) -> float:
    """Advance of ``ch`` in 1/1000 em for a standard-14 font."""
    name = agl.UV2AGL.get(ord(ch), f"uni{ord(ch):04X}")
    return float(METRICS[font]["widths"].get(name, 0))


def text_width(font: str, text: str, size: float) -> float:
    return sum(std_width(font, ch) for ch in text) * size / 1000.0


@dataclass
class FontSpec:
    """A font resource: ``kind`` is ``"winansi"`` or ``"cid"``."""

    base: str = "Helvetica"
    kind: str = "winansi"
    # the standard-14 font whose metrics supply the widths
    metrics: str = "Helvetica"

    @property
    def descent(self) -> float:
        return CID_DESCENT / 1000.0 if self.kind == "cid" else -0.2

    @property
    def ascent(self) -> float:
        return CID_ASCENT / 1000.0 if self.kind == "cid" else 0.8


@dataclass
class Run:
    """Ground truth for one emitted text run, in TopLeft coordinates."""

    page_no: int
    text: str
    x: float
    baseline: float
    font_size: float
    font_name: str
    descent: float
    ascent: float
    width: float

    @property
    def bottom(self) -> float:
        return self.baseline - self.descent * self.font_size

    @property
    def top(self) -> float:
        return self.baseline - self.ascent * self.font_size


@dataclass
class ImageRun:
    page_no: int
    l: float
    t: float
    r: float
    b: float


class PageBuilder:
    def __init__(self, doc: SynthPdf, page_no: int, width: float, height: float, rotate: int = 0) -> None:
        self.doc = doc
        self.page_no = page_no
        self.width = width
        self.height = height
        self.rotate = rotate
        self.ops: list[bytes] = []
        self.runs: list[Run] = []
        self.images: list[ImageRun] = []
        self.raw: list[bytes] = []

    def _encode(self, font: str, text: str) -> bytes:
        spec = self.doc.fonts[font]
        if spec.kind == "cid":
            return b"".join(self.doc.cid_code(ch).to_bytes(2, "big") for ch in text)
        out = bytearray()
        for ch in text:
            glyph = agl.UV2AGL.get(ord(ch))
            code = _WINANSI_CODE.get(glyph) if glyph else None
            if code is None:
                raise ValueError(f"{ch!r} is not encodable in WinAnsi")
            out.append(code)
        return bytes(out)

    def _string(self, font: str, text: str, hex_string: bool) -> bytes:
        data = self._encode(font, text)
        if hex_string or self.doc.fonts[font].kind == "cid":
            return b"<" + data.hex().upper().encode() + b">"
        return _literal(data)

    def text(
        self,
        x: float,
        y: float,
        text: str,
        font: str = "F1",
        size: float = 12.0,
        mode: str = "Td",
        hex_string: bool = False,
    ) -> Run:
        """Show ``text`` with its first glyph origin at (x, y), y measured from the top.

        ``mode`` picks the operator sequence used to get there: ``Td``,
        ``Tm``, ``cm``, ``TD``, ``quote``, ``dquote``, ``TJ`` or ``Tz``.
        """
        spec = self.doc.fonts[font]
        py = self.height - y  # PDF user space is bottom-up
        s = self._string(font, text, hex_string)
        f = _fmt_num
        name = b"/" + font.encode()
        if mode == "Td":
            op = b"BT %s %s Tf %s %s Td %s Tj ET" % (name, f(size), f(x), f(py), s)
        elif mode == "Tm":
            op = b"BT %s 1 Tf %s 0 0 %s %s %s Tm %s Tj ET" % (name, f(size), f(size), f(x), f(py), s)
        elif mode == "cm":
            dx, dy = round(x / 2, 2), round(py / 3, 2)
            op = b"q 1 0 0 1 %s %s cm BT %s %s Tf %s %s Td %s Tj ET Q" % (
                f(dx), f(dy), name, f(size), f(x - dx), f(py - dy), s)
        elif mode == "TD":
            op = b"BT %s %s Tf %s %s Td 0 -15 TD %s Tj ET" % (name, f(size), f(x), f(py + 15), s)
        elif mode == "quote":
            op = b"BT %s %s Tf 14 TL %s %s Td %s ' ET" % (name, f(size), f(x), f(py + 14), s)
        elif mode == "dquote":
            op = b'BT %s %s Tf 16 TL %s %s Td 0 0 %s " ET' % (name, f(size), f(x), f(py + 16), s)
        elif mode == "TJ":
            parts = []
            for i, ch in enumerate(text):
                parts.append(self._string(font, ch, hex_string))
                if i < len(text) - 1 and ch != " " and text[i + 1] != " ":
                    parts.append(b"%d" % (15 if i % 2 else -10))
            op = b"BT %s %s Tf %s %s Td [%s] TJ ET" % (name, f(size), f(x), f(py), b" ".join(parts))
        elif mode == "Tz":
            op = b"BT %s %s Tf 85 Tz %s %s Td %s Tj 100 Tz ET" % (name, f(size), f(x), f(py), s)
        else:
            raise ValueError(mode)
        self.ops.append(op)
        width = self._run_width(spec, text, size, mode)
        run = Run(self.page_no, text, x, y, size, spec.base, spec.descent, spec.ascent, width)
        self.runs.append(run)
        return run

    @staticmethod
    def _run_width(spec: FontSpec, text: str, size: float, mode: str) -> float:
        w = text_width(spec.metrics, text, size)
        if mode == "Tz":
            return w * 0.85
        if mode == "TJ":
            kerns = 0.0
            for i, ch in enumerate(text[:-1]):
                if ch != " " and text[i + 1] != " ":
                    kerns += 15 if i % 2 else -10
            return w - kerns * size / 1000.0
        return w

    def image(self, l: float, t: float, r: float, b: float) -> ImageRun:
        name = self.doc.image_name()
        f = _fmt_num
        self.ops.append(
            b"q %s 0 0 %s %s %s cm /%s Do Q" % (f(r - l), f(b - t), f(l), f(self.height - b), name.encode())
        )
        img = ImageRun(self.page_no, l, t, r, b)
        self.images.append(img)
        return img

    def raw_ops(self, data: bytes) -> None:
        """Append content bytes verbatim; no ground truth is recorded."""
        self.ops.append(data)


class SynthPdf:
    """Multi-page document builder over ``PdfWriter``."""

    def __init__(self, fonts: Optional[dict[str, FontSpec]] = None) -> None:
        self.fonts = fonts or {
            "F1": FontSpec("Helvetica"),
            "F2": FontSpec("Helvetica-Bold", metrics="Helvetica-Bold"),
            "F3": FontSpec("Courier", metrics="Courier"),
        }
        self.pages: list[PageBuilder] = []
        self._cids: dict[str, int] = {}
        self._images = 0

    def page(self, width: float = 612.0, height: float = 792.0, rotate: int = 0) -> PageBuilder:
        p = PageBuilder(self, len(self.pages) + 1, width, height, rotate)
        self.pages.append(p)
        return p

    def cid_code(self, ch: str) -> int:
        if ch not in self._cids:
            self._cids[ch] = len(self._cids) + 1
        return self._cids[ch]

    def image_name(self) -> str:
        self._images += 1
        return f"Im{self._images}"

    @property
    def runs(self) -> list[Run]:
        return [r for p in self.pages for r in p.runs]

    @property
    def images(self) -> list[ImageRun]:
        return [i for p in self.pages for i in p.images]

    def _font_objects(self, w: PdfWriter) -> dict:
        res = {}
        for key, spec in self.fonts.items():
            if spec.kind == "winansi":
                res[key] = w.add({
                    "Type": Name("Font"), "Subtype": Name("Type1"),
                    "BaseFont": Name(spec.base), "Encoding": Name("WinAnsiEncoding"),
                })
                continue
            chars = sorted(self._cids.items(), key=lambda kv: kv[1])
            lines = [b"/CIDInit /ProcSet findresource begin 12 dict begin begincmap",
                     b"1 begincodespacerange <0000> <FFFF> endcodespacerange"]
            for i in range(0, len(chars), 100):
                chunk = chars[i : i + 100]
                lines.append(b"%d beginbfchar" % len(chunk))
                for ch, cid in chunk:
                    lines.append(b"<%04X> <%s>" % (cid, ch.encode("utf-16-be").hex().upper().encode()))
                lines.append(b"endbfchar")
            lines.append(b"endcmap CMapName currentdict /CMap defineresource pop end end")
            tounicode = w.add_stream({}, b"\n".join(lines))
            widths: list = []
            for ch, cid in chars:
                widths += [cid, [std_width(spec.metrics, ch)]]
            descriptor = w.add({
                "Type": Name("FontDescriptor"), "FontName": Name(spec.base), "Flags": 32,
                "FontBBox": [-166, -225, 1000, 931], "ItalicAngle": 0,
                "Ascent": CID_ASCENT, "Descent": CID_DESCENT, "CapHeight": 718, "StemV": 88,
            })
            cidfont = w.add({
                "Type": Name("Font"), "Subtype": Name("CIDFontType2"), "BaseFont": Name(spec.base),
                "CIDSystemInfo": {"Registry": b"Adobe", "Ordering": b"Identity", "Supplement": 0},
                "FontDescriptor": descriptor, "DW": 1000, "W": widths,
            })
            res[key] = w.add({
                "Type": Name("Font"), "Subtype": Name("Type0"), "BaseFont": Name(spec.base),
                "Encoding": Name("Identity-H"), "DescendantFonts": [cidfont], "ToUnicode": tounicode,
            })
        return res

    def to_bytes(self, xref: str = "classic", compress: bool = True) -> bytes:
        w = PdfWriter(xref=xref, compress=compress)
        catalog = w.reserve()
        pages_ref = w.reserve()
        fonts = self._font_objects(w)
        image = None
        if self._images:
            image = w.add_stream({
                "Type": Name("XObject"), "Subtype": Name("Image"), "Width": 1, "Height": 1,
                "ColorSpace": Name("DeviceGray"), "BitsPerComponent": 8,
            }, b"\x80")
        kids = []
        for p in self.pages:
            content = w.add_stream({}, b"\n".join(p.ops))
            resources: dict = {"Font": dict(fonts)}
            if image is not None:
                resources["XObject"] = {f"Im{i}": image for i in range(1, self._images + 1)}
            page: dict = {
                "Type": Name("Page"), "Parent": pages_ref,
                "MediaBox": [0, 0, p.width, p.height],
                "Resources": resources, "Contents": content,
            }
            if p.rotate:
                page["Rotate"] = p.rotate
            kids.append(w.add(page))
        w.put(pages_ref, {"Type": Name("Pages"), "Kids": kids, "Count": len(kids)})
        w.put(catalog, {"Type": Name("Catalog"), "Pages": pages_ref})
        return w.build(catalog)
