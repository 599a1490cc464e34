"""CMap parsing for ToUnicode maps and embedded CID encodings."""

from __future__ import annotations

from dataclasses import dataclass, field

from docforge.pdf.objects import Keyword, Lexer, PdfSyntaxError


@dataclass
class CMap:
    codespace: list[tuple[bytes, bytes]] = field(default_factory=list)
    to_unicode: dict[int, str] = field(default_factory=dict)
    to_cid: dict[int, int] = field(default_factory=dict)

    def code_lengths(self) -> list[int]:
        return sorted({len(lo) for lo, _ in self.codespace})

    def split_codes(self, data: bytes, default_len: int = 2) -> list[tuple[int, int]]:
        """Split a byte string into ``(code, nbytes)`` pairs."""
        ranges = self.codespace
        out = []
        pos = 0
        n = len(data)
        if not ranges:
            while pos < n:
                chunk = data[pos : pos + default_len]
                out.append((int.from_bytes(chunk, "big"), len(chunk)))
                pos += default_len
            return out
        while pos < n:
            for lo, hi in ranges:
                k = len(lo)
                chunk = data[pos : pos + k]
                if len(chunk) == k and all(lo[i] <= chunk[i] <= hi[i] for i in range(k)):
                    out.append((int.from_bytes(chunk, "big"), k))
                    pos += k
                    break
            else:
                k = min(len(lo) for lo, _ in ranges)
                chunk = data[pos : pos + k]
                out.append((int.from_bytes(chunk, "big"), len(chunk)))
                pos += k
        return out


def _utf16(raw: bytes) -> str:
    if len(raw) % 2:
        raw = b"\0" + raw
    return raw.decode("utf-16-be", "replace")


def parse_cmap(data: bytes) -> CMap:
    cmap = CMap()
    lex = Lexer(data)
    operands: list = []
    while True:
        try:
            kind, value = lex.next()
        except PdfSyntaxError:
            break
        if kind is None:
            break
        if kind != "kw":
            if kind == "aopen":
                lex.pos -= 1
                try:
                    operands.append(lex.parse_object())
                except PdfSyntaxError:
                    operands.clear()
                continue
            if kind == "dopen":
                lex.pos -= 2
                try:
                    operands.append(lex.parse_object())
                except PdfSyntaxError:
                    operands.clear()
                continue
            operands.append(value)
            continue
        op = Keyword(value)
        if op == "endcodespacerange":
            for lo, hi in zip(operands[0::2], operands[1::2]):
                if isinstance(lo, bytes) and isinstance(hi, bytes) and len(lo) == len(hi):
                    cmap.codespace.append((lo, hi))
        elif op == "endbfchar":
            for src, dst in zip(operands[0::2], operands[1::2]):
                if isinstance(src, bytes) and isinstance(dst, bytes):
                    cmap.to_unicode[int.from_bytes(src, "big")] = _utf16(dst)
        elif op == "endbfrange":
            for lo, hi, dst in zip(operands[0::3], operands[1::3], operands[2::3]):
                if not (isinstance(lo, bytes) and isinstance(hi, bytes)):
                    continue
                a, b = int.from_bytes(lo, "big"), int.from_bytes(hi, "big")
                if b - a > 0xFFFF:
                    continue
                if isinstance(dst, list):
                    for i, d in enumerate(dst[: b - a + 1]):
                        if isinstance(d, bytes):
                            cmap.to_unicode[a + i] = _utf16(d)
                elif isinstance(dst, bytes) and dst:
                    base = int.from_bytes(dst, "big")
                    width = len(dst)
                    mask = (1 << (8 * width)) - 1
                    for i in range(b - a + 1):
                        cmap.to_unicode[a + i] = _utf16(((base + i) & mask).to_bytes(width, "big"))
        elif op == "endcidchar":
            for src, cid in zip(operands[0::2], operands[1::2]):
                if isinstance(src, bytes) and isinstance(cid, int):
                    cmap.to_cid[int.from_bytes(src, "big")] = cid
        elif op == "endcidrange":
            for lo, hi, cid in zip(operands[0::3], operands[1::3], operands[2::3]):
                if isinstance(lo, bytes) and isinstance(hi, bytes) and isinstance(cid, int):
                    a, b = int.from_bytes(lo, "big"), int.from_bytes(hi, "big")
                    for i in range(min(b - a + 1, 0x10000)):
                        cmap.to_cid[a + i] = cid + i
        operands = []
    return cmap
