"""Font resources: code splitting, glyph widths and Unicode mapping."""

from __future__ import annotations

import re
from typing import Optional

from docforge.errors import CorruptStream, UnsupportedFilter
from docforge.pdf._std14 import METRICS
from docforge.pdf.cmap import CMap, parse_cmap
from docforge.pdf.encodings import BASE_ENCODINGS, STANDARD, WIN_ANSI, builtin_encoding, glyph_to_unicode
from docforge.pdf.objects import Stream
from docforge.pdf.xref import ObjectGraph

REPLACEMENT = "�"
FALLBACK_WIDTH = 500.0
DEFAULT_ASCENT = 0.8
DEFAULT_DESCENT = -0.2

_SUBSET_PREFIX = re.compile(r"^[A-Z]{6}\+")

_ALIASES = {
    "Arial": "Helvetica",
    "Arial,Bold": "Helvetica-Bold",
    "Arial,Italic": "Helvetica-Oblique",
    "Arial,BoldItalic": "Helvetica-BoldOblique",
    "ArialMT": "Helvetica",
    "Arial-BoldMT": "Helvetica-Bold",
    "TimesNewRoman": "Times-Roman",
    "TimesNewRoman,Bold": "Times-Bold",
    "TimesNewRomanPSMT": "Times-Roman",
    "CourierNew": "Courier",
    "CourierNewPSMT": "Courier",
}


def standard_font_name(base: str) -> Optional[str]:
    base = _SUBSET_PREFIX.sub("", base)
    if base in METRICS:
        return base
    return _ALIASES.get(base)


class PdfFont:
    """A font resource prepared for text decoding.

    ``glyphs(data)`` turns a shown string into ``(text, width, is_space)``
    triples where ``width`` is in text-space units (1/1000 em already
    divided out) and ``is_space`` marks the single-byte code 32 that word
    spacing applies to.
    """

    def __init__(self, fontdict: dict, graph: ObjectGraph, resource_name: str = "") -> None:
        r = graph.resolve
        self.graph = graph
        self.warnings: list[str] = []
        self.subtype = r(fontdict.get("Subtype")) or "Type1"
        raw_base = r(fontdict.get("BaseFont"))
        self.name = _SUBSET_PREFIX.sub("", str(raw_base)) if raw_base else str.__str__(resource_name) or "unknown"
        self.type3 = self.subtype == "Type3"
        self.composite = self.subtype == "Type0"
        self.ascent = DEFAULT_ASCENT
        self.descent = DEFAULT_DESCENT
        self._cache: dict[int, tuple[str, float]] = {}
        self._warned_width = False
        self._warned_unmapped = False
        self.to_unicode: Optional[CMap] = self._load_to_unicode(fontdict.get("ToUnicode"))
        if self.composite:
            self._init_composite(fontdict)
        else:
            self._init_simple(fontdict)

    # -- setup -------------------------------------------------------------

    def _load_to_unicode(self, ref) -> Optional[CMap]:
        stream = self.graph.resolve(ref)
        if not isinstance(stream, Stream):
            return None
        try:
            return parse_cmap(self.graph.stream_data(stream))
        except (CorruptStream, UnsupportedFilter) as exc:
            self.warnings.append(f"font {self.name}: ToUnicode unreadable ({exc})")
            return None

    def _descriptor(self, fontdict: dict) -> None:
        desc = self.graph.resolve(fontdict.get("FontDescriptor"))
        self.missing_width: Optional[float] = None
        if not isinstance(desc, dict):
            return
        r = self.graph.resolve
        asc, dsc = r(desc.get("Ascent")), r(desc.get("Descent"))
        if isinstance(asc, (int, float)) and isinstance(dsc, (int, float)) and (asc or dsc):
            self.ascent = asc / 1000.0
            self.descent = (dsc if dsc <= 0 else -dsc) / 1000.0
        mw = r(desc.get("MissingWidth"))
        if isinstance(mw, (int, float)):
            self.missing_width = float(mw)

    def _init_simple(self, fontdict: dict) -> None:
        r = self.graph.resolve
        self._descriptor(fontdict)
        self.std = standard_font_name(self.name)
        widths = r(fontdict.get("Widths"))
        self.first_char = r(fontdict.get("FirstChar")) or 0
        self.widths = [r(w) for w in widths] if isinstance(widths, list) else None

        enc = r(fontdict.get("Encoding"))
        if self.std in ("Symbol", "ZapfDingbats"):
            base = builtin_encoding(self.std)
        elif self.subtype == "TrueType":
            base = WIN_ANSI
        else:
            base = STANDARD
        diffs = None
        if isinstance(enc, str):
            base = BASE_ENCODINGS.get(enc, base)
        elif isinstance(enc, dict):
            base = BASE_ENCODINGS.get(r(enc.get("BaseEncoding")), base)
            diffs = r(enc.get("Differences"))
        names = list(base)
        if isinstance(diffs, list):
            code = 0
            for entry in diffs:
                entry = r(entry)
                if isinstance(entry, int):
                    code = entry
                elif isinstance(entry, str) and 0 <= code < 256:
                    names[code] = str(entry)
                    code += 1
        self.glyph_names = names

    def _init_composite(self, fontdict: dict) -> None:
        r = self.graph.resolve
        self.std = None
        descendants = r(fontdict.get("DescendantFonts"))
        cid_font = r(descendants[0]) if isinstance(descendants, list) and descendants else {}
        if not isinstance(cid_font, dict):
            cid_font = {}
        self._descriptor(cid_font)
        dw = r(cid_font.get("DW"))
        self.default_width = float(dw) if isinstance(dw, (int, float)) else 1000.0
        self.cid_widths: dict[int, float] = {}
        w = r(cid_font.get("W"))
        if isinstance(w, list):
            i = 0
            while i < len(w):
                first = r(w[i])
                nxt = r(w[i + 1]) if i + 1 < len(w) else None
                if isinstance(nxt, list):
                    for j, val in enumerate(nxt):
                        val = r(val)
                        if isinstance(val, (int, float)):
                            self.cid_widths[first + j] = float(val)
                    i += 2
                else:
                    last = nxt
                    val = r(w[i + 2]) if i + 2 < len(w) else None
                    if isinstance(first, int) and isinstance(last, int) and isinstance(val, (int, float)):
                        for cid in range(first, min(last, first + 0xFFFF) + 1):
                            self.cid_widths[cid] = float(val)
                    i += 3

        enc = r(fontdict.get("Encoding"))
        self.encoding_cmap: Optional[CMap] = None
        if isinstance(enc, Stream):
            try:
                self.encoding_cmap = parse_cmap(self.graph.stream_data(enc))
            except (CorruptStream, UnsupportedFilter) as exc:
                self.warnings.append(f"font {self.name}: encoding CMap unreadable ({exc})")
        elif enc not in ("Identity-H", "Identity-V"):
            self.warnings.append(
                f"font {self.name}: CMap {enc} not supported, assuming 2-byte identity codes"
            )

    # -- decoding ----------------------------------------------------------

    def split(self, data: bytes) -> list[tuple[int, int]]:
        if not self.composite:
            return [(b, 1) for b in data]
        if self.encoding_cmap is not None and self.encoding_cmap.codespace:
            return self.encoding_cmap.split_codes(data)
        if self.to_unicode is not None and self.to_unicode.codespace:
            return self.to_unicode.split_codes(data)
        return CMap().split_codes(data, 2)

    def _lookup(self, code: int) -> tuple[str, float]:
        hit = self._cache.get(code)
        if hit is not None:
            return hit
        text = None
        if self.to_unicode is not None:
            text = self.to_unicode.to_unicode.get(code)
        if self.composite:
            cid = code
            if self.encoding_cmap is not None:
                cid = self.encoding_cmap.to_cid.get(code, code)
            width = self.cid_widths.get(cid, self.default_width)
        else:
            name = self.glyph_names[code] if 0 <= code < 256 else ".notdef"
            if text is None:
                text = glyph_to_unicode(name)
            width = self._simple_width(code, name)
        if text is None:
            text = REPLACEMENT
            if not self._warned_unmapped:
                self._warned_unmapped = True
                self.warnings.append(f"font {self.name}: code {code:#x} has no Unicode mapping")
        hit = (text, width / 1000.0)
        self._cache[code] = hit
        return hit

    def _simple_width(self, code: int, name: str) -> float:
        if self.widths is not None:
            idx = code - self.first_char
            if 0 <= idx < len(self.widths) and isinstance(self.widths[idx], (int, float)):
                return float(self.widths[idx])
        if self.std is not None:
            w = METRICS[self.std]["widths"].get(name)
            if w is not None:
                return float(w)
        if self.missing_width is not None:
            return self.missing_width
        if self.widths is not None:
            return 0.0
        if not self._warned_width:
            self._warned_width = True
            self.warnings.append(f"font {self.name}: no glyph widths, assuming 500/1000 em")
        return FALLBACK_WIDTH

    def glyphs(self, data: bytes) -> list[tuple[str, float, bool]]:
        out = []
        lookup = self._lookup
        for code, nbytes in self.split(data):
            text, width = lookup(code)
            out.append((text, width, nbytes == 1 and code == 32))
        return out

    def decode_text(self, data: bytes) -> str:
        return "".join(t for t, _, _ in self.glyphs(data))


def decode_text(data: bytes, font: PdfFont) -> str:
    """Decode a shown string with ``font``; unmappable codes become U+FFFD."""
    return font.decode_text(data)
