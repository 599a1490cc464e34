"""PDF object model and tokenizer (ISO 32000-1 section 7.3 syntax)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

WHITESPACE = b"\x00\t\n\x0c\r "
DELIMS = b"()<>[]{}/%"

_REGULAR = rb"[^\x00\t\n\x0c\r ()<>\[\]{}/%]"
TOKEN_RE = re.compile(
    rb"(?P<ws>(?:[\x00\t\n\x0c\r ]|%[^\r\n]*)+)"
    rb"|(?P<num>[+-]?(?:\d+\.?\d*|\.\d+))(?!" + _REGULAR + rb")"
    rb"|(?P<name>/" + _REGULAR + rb"*)"
    rb"|(?P<dopen><<)|(?P<dclose>>>)"
    rb"|(?P<hex><[^>]*>)"
    rb"|(?P<aopen>\[)|(?P<aclose>\])"
    rb"|(?P<lit>\()"
    rb"|(?P<brace>[{}])"
    rb"|(?P<kw>" + _REGULAR + rb"+)"
    rb"|(?P<junk>[)>])"
)
_LIT_SPECIAL = re.compile(rb"[()\\\r]")
_NAME_ESCAPE = re.compile(rb"#([0-9A-Fa-f]{2})")
_HEX_WS = re.compile(rb"[\x00\t\n\x0c\r ]+")

_ESCAPES = {
    ord("n"): b"\n",
    ord("r"): b"\r",
    ord("t"): b"\t",
    ord("b"): b"\b",
    ord("f"): b"\f",
    ord("("): b"(",
    ord(")"): b")",
    ord("\\"): b"\\",
}


class Name(str):
    """A PDF name object, stored without the leading slash."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "/" + str.__str__(self)


class Keyword(str):
    """A bare token such as ``obj``, ``R`` or a content-stream operator."""

    __slots__ = ()


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int = 0


@dataclass
class Stream:
    attrs: dict
    raw: bytes = field(repr=False)
    objnum: Optional[int] = None
    _decoded: Optional[bytes] = field(default=None, repr=False, compare=False)

    def get(self, key: str, default: Any = None) -> Any:
        return self.attrs.get(key, default)


class PdfSyntaxError(ValueError):
    pass


_EOF = object()


class Lexer:
    """Tokenizer over a bytes buffer with single-object parsing helpers."""

    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def next(self):
        """Return ``(kind, value)`` or ``(None, None)`` at end of input."""
        data = self.data
        while True:
            m = TOKEN_RE.match(data, self.pos)
            if m is None:
                if self.pos >= len(data):
                    return None, None
                # stray byte that cannot start any token
                self.pos += 1
                continue
            kind = m.lastgroup
            self.pos = m.end()
            if kind == "ws":
                continue
            text = m.group()
            if kind == "num":
                if b"." in text:
                    return "num", float(text)
                return "num", int(text)
            if kind == "name":
                return "name", _decode_name(text[1:])
            if kind == "hex":
                return "str", _decode_hex(text[1:-1])
            if kind == "lit":
                return "str", self._literal()
            if kind == "kw":
                return "kw", Keyword(text.decode("latin-1"))
            if kind == "junk":
                continue
            return kind, text

    def _literal(self) -> bytes:
        data = self.data
        pos = self.pos
        depth = 1
        out = bytearray()
        n = len(data)
        while True:
            m = _LIT_SPECIAL.search(data, pos)
            if m is None:
                out += data[pos:]
                self.pos = n
                return bytes(out)
            out += data[pos : m.start()]
            ch = data[m.start()]
            pos = m.end()
            if ch == 0x28:  # (
                depth += 1
                out.append(ch)
            elif ch == 0x29:  # )
                depth -= 1
                if depth == 0:
                    self.pos = pos
                    return bytes(out)
                out.append(ch)
            elif ch == 0x0D:  # bare CR or CRLF -> LF
                out.append(0x0A)
                if pos < n and data[pos] == 0x0A:
                    pos += 1
            else:  # backslash
                if pos >= n:
                    break
                nxt = data[pos]
                if nxt in _ESCAPES:
                    out += _ESCAPES[nxt]
                    pos += 1
                elif 0x30 <= nxt <= 0x37:
                    end = pos
                    while end < n and end - pos < 3 and 0x30 <= data[end] <= 0x37:
                        end += 1
                    out.append(int(data[pos:end], 8) & 0xFF)
                    pos = end
                elif nxt == 0x0D:
                    pos += 2 if data[pos + 1 : pos + 2] == b"\n" else 1
                elif nxt == 0x0A:
                    pos += 1
                else:
                    out.append(nxt)
                    pos += 1
        self.pos = n
        return bytes(out)

    # -- object parsing ----------------------------------------------------

    def parse_object(self):
        """Parse one object; integers followed by ``g R`` become ``Ref``."""
        kind, value = self.next()
        return self._finish(kind, value)

    def _finish(self, kind, value):
        if kind is None:
            raise PdfSyntaxError("unexpected end of data")
        if kind == "num":
            if isinstance(value, int) and value >= 0:
                save = self.pos
                k2, v2 = self.next()
                if k2 == "num" and isinstance(v2, int) and v2 >= 0:
                    k3, v3 = self.next()
                    if k3 == "kw" and v3 == "R":
                        return Ref(value, v2)
                self.pos = save
            return value
        if kind == "name":
            return value
        if kind == "str":
            return value
        if kind == "aopen":
            items = []
            while True:
                k, v = self.next()
                if k == "aclose":
                    return items
                if k is None:
                    raise PdfSyntaxError("unterminated array")
                if k == "dclose":
                    raise PdfSyntaxError("'>>' inside array")
                items.append(self._finish(k, v))
        if kind == "dopen":
            return self._dict_body()
        if kind == "kw":
            if value == "true":
                return True
            if value == "false":
                return False
            if value == "null":
                return None
            return value
        if kind in ("aclose", "dclose", "brace"):
            return Keyword(value.decode("latin-1"))
        raise PdfSyntaxError(f"unexpected token {kind}")

    def _dict_body(self) -> dict:
        out: dict = {}
        while True:
            k, v = self.next()
            if k == "dclose":
                return out
            if k is None:
                raise PdfSyntaxError("unterminated dictionary")
            if k != "name":
                # tolerate junk keys by skipping them
                if k == "aclose":
                    raise PdfSyntaxError("']' inside dictionary")
                continue
            k2, v2 = self.next()
            if k2 == "dclose":
                out[v] = None
                return out
            out[v] = self._finish(k2, v2)


def _decode_name(raw: bytes) -> Name:
    if b"#" in raw:
        raw = _NAME_ESCAPE.sub(lambda m: bytes([int(m.group(1), 16)]), raw)
    return Name(raw.decode("latin-1"))


def _decode_hex(raw: bytes) -> bytes:
    raw = _HEX_WS.sub(b"", raw)
    if len(raw) % 2:
        raw += b"0"
    try:
        return bytes.fromhex(raw.decode("ascii"))
    except ValueError:
        cleaned = bytes(c for c in raw if chr(c) in "0123456789abcdefABCDEF")
        if len(cleaned) % 2:
            cleaned += b"0"
        return bytes.fromhex(cleaned.decode("ascii"))


def parse_object_at(data: bytes, pos: int):
    """Parse a single direct object starting at ``pos``."""
    return Lexer(data, pos).parse_object()


_INDIRECT_RE = re.compile(rb"\s*(\d+)\s+(\d+)\s+obj\b")


def parse_indirect(data: bytes, pos: int, resolve_length=None):
    """Parse ``N G obj ... endobj`` at ``pos``.

    Returns ``(num, gen, value)``. Streams come back as ``Stream`` with
    their raw (still encoded) bytes. ``resolve_length`` maps an indirect
    ``/Length`` to an integer when given.
    """
    m = _INDIRECT_RE.match(data, pos)
    if m is None:
        raise PdfSyntaxError(f"no object header at offset {pos}")
    num, gen = int(m.group(1)), int(m.group(2))
    lex = Lexer(data, m.end())
    value = lex.parse_object()
    if isinstance(value, dict):
        save = lex.pos
        k, v = lex.next()
        if k == "kw" and v == "stream":
            start = lex.pos
            if data[start : start + 2] == b"\r\n":
                start += 2
            elif data[start : start + 1] in (b"\n", b"\r"):
                start += 1
            raw = _stream_data(data, start, value.get("Length"), resolve_length)
            return num, gen, Stream(value, raw, num)
        lex.pos = save
    return num, gen, value


def _stream_data(data: bytes, start: int, length, resolve_length) -> bytes:
    if isinstance(length, Ref) and resolve_length is not None:
        try:
            length = resolve_length(length)
        except Exception:
            length = None
    if isinstance(length, int) and length >= 0:
        end = start + length
        tail = data[end : end + 20].lstrip(b"\r\n \t\x00\x0c")
        if tail.startswith(b"endstream"):
            return data[start:end]
    # fall back to scanning for the end marker
    idx = data.find(b"endstream", start)
    if idx < 0:
        return data[start:]
    end = idx
    if data[end - 2 : end] == b"\r\n":
        end -= 2
    elif data[end - 1 : end] in (b"\n", b"\r"):
        end -= 1
    return data[start:end]
