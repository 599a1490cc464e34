"""Input sniffing and decoding for markup sources."""

from __future__ import annotations

import codecs
from dataclasses import dataclass
from enum import Enum
from pathlib import PurePath
from typing import Optional

from docforge.errors import UndecodableInput
from docforge.model import DocumentOrigin, Provenance

SNIFF_BYTES = 1024


class InputFormat(str, Enum):
    PDF = "pdf"
    HTML = "html"
    MARKDOWN = "md"
    UNKNOWN = "unknown"


EXTENSIONS = {
    ".pdf": InputFormat.PDF,
    ".html": InputFormat.HTML,
    ".htm": InputFormat.HTML,
    ".xhtml": InputFormat.HTML,
    ".md": InputFormat.MARKDOWN,
    ".markdown": InputFormat.MARKDOWN,
    ".mdown": InputFormat.MARKDOWN,
}

MIMETYPES = {
    InputFormat.PDF: "application/pdf",
    InputFormat.HTML: "text/html",
    InputFormat.MARKDOWN: "text/markdown",
}


def detect_format(data: bytes, filename_hint: Optional[str] = None) -> InputFormat:
    """``%PDF-`` anywhere in the first KiB wins, then an HTML prefix, then the extension."""
    head = data[:SNIFF_BYTES]
    if b"%PDF-" in head:
        return InputFormat.PDF
    if _html_prefix(head):
        return InputFormat.HTML
    if filename_hint:
        return EXTENSIONS.get(PurePath(filename_hint).suffix.lower(), InputFormat.UNKNOWN)
    return InputFormat.UNKNOWN


def _html_prefix(head: bytes) -> bool:
    """True when the first tag, past an XML declaration and comments, opens an HTML document."""
    rest = head.removeprefix(codecs.BOM_UTF8).lower()
    while True:
        rest = rest.lstrip()
        if rest.startswith(b"<?xml"):
            closer = b"?>"
        elif rest.startswith(b"<!--"):
            closer = b"-->"
        else:
            break
        end = rest.find(closer)
        if end < 0:
            return False
        rest = rest[end + len(closer):]
    return rest.startswith(b"<!doctype html") or rest.startswith(b"<html")


@dataclass
class MarkupSource:
    format: InputFormat
    data: bytes
    base_name: str = ""

    def text(self) -> str:
        data = self.data
        if data.startswith(codecs.BOM_UTF8):
            data = data[len(codecs.BOM_UTF8):]
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UndecodableInput(f"{self.base_name or 'input'}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc

    @property
    def stem(self) -> str:
        return PurePath(self.base_name).stem if self.base_name else ""

    def origin(self) -> DocumentOrigin:
        return DocumentOrigin.from_bytes(self.data, self.base_name, MIMETYPES[self.format])


def markup_prov(text: str = "") -> list[Provenance]:
    # markup has no pages; everything is reported on page 1 without a box
    return [Provenance(1, None, (0, len(text)))]
