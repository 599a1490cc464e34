"""Parsed-page containers handed from the PDF backend to the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

from docforge.model import BoundingBox


@dataclass(frozen=True)
class TextCell:
    """A run of glyphs emitted contiguously on one baseline.

    ``bbox`` is in TopLeft page coordinates. ``stream_index`` is the
    emission order within the page's content stream.
    """

    text: str
    bbox: BoundingBox
    font_size: float
    font_name: str
    stream_index: int

    def to_record(self, page_no: int) -> dict:
        return {
            "page": page_no,
            "text": self.text,
            "l": self.bbox.l,
            "t": self.bbox.t,
            "r": self.bbox.r,
            "b": self.bbox.b,
            "font_size": self.font_size,
            "font_name": self.font_name,
            "stream_index": self.stream_index,
        }


@dataclass
class ParsedPage:
    page_no: int
    width: float
    height: float
    cells: list[TextCell] = field(default_factory=list)
    bitmap_regions: list[BoundingBox] = field(default_factory=list)

    @property
    def bbox(self) -> BoundingBox:
        return BoundingBox(0.0, 0.0, self.width, self.height)


@dataclass
class ParsedPdf:
    pages: list[ParsedPage] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    # 1-based numbers of pages whose content could not be read at all
    failed_pages: list[int] = field(default_factory=list)
