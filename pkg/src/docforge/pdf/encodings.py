"""Simple-font encodings and glyph-name to Unicode mapping."""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

from fontTools import agl
from fontTools.encodings.MacRoman import MacRoman
from fontTools.encodings.StandardEncoding import StandardEncoding

from docforge.pdf._std14 import METRICS


def _winansi() -> list[str]:
    names = [".notdef"] * 256
    for code in range(32, 256):
        try:
            ch = bytes([code]).decode("cp1252")
        except UnicodeDecodeError:
            continue  # 0x81, 0x8D, 0x8F, 0x90, 0x9D are undefined
        uv = ord(ch)
        names[code] = agl.UV2AGL.get(uv, f"uni{uv:04X}")
    names[0xA0] = "space"
    names[0xAD] = "hyphen"
    return names


WIN_ANSI: list[str] = _winansi()
MAC_ROMAN: list[str] = list(MacRoman)
STANDARD: list[str] = list(StandardEncoding)

BASE_ENCODINGS = {
    "WinAnsiEncoding": WIN_ANSI,
    "MacRomanEncoding": MAC_ROMAN,
    "StandardEncoding": STANDARD,
}


def builtin_encoding(std_name: str) -> list[str]:
    table = METRICS[std_name].get("builtin")
    if table is None:
        return STANDARD
    names = [".notdef"] * 256
    for code, name in table.items():
        names[code] = name
    return names


@lru_cache(maxsize=4096)
def glyph_to_unicode(name: str) -> Optional[str]:
    """Map a glyph name to text, or ``None`` when it has no known meaning."""
    if not name or name == ".notdef":
        return None
    text = agl.toUnicode(name)
    return text or None

