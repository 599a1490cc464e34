"""Page tree walking and per-page parsing on top of the object graph."""

from __future__ import annotations

from dataclasses import dataclass

from docforge.errors import CorruptStream, CorruptXref, UnsupportedFilter
from docforge.pdf.content import DEFAULT_SPLIT_GAP, CellExtractor, page_base_matrix
from docforge.pdf.objects import Stream
from docforge.pdf.types import ParsedPage, ParsedPdf
from docforge.pdf.xref import ObjectGraph, decode_object_graph

LETTER = (0.0, 0.0, 612.0, 792.0)
_INHERITABLE = ("Resources", "MediaBox", "CropBox", "Rotate")


@dataclass
class PageRef:
    page_no: int
    obj: dict
    attrs: dict


class PdfDocument:
    """An opened PDF whose pages can be parsed independently.

    The object graph is decoded once in the constructor; after that it is
    only read, so ``parse_page`` may run on several threads at once.
    """

    def __init__(self, data: bytes, split_gap: float = DEFAULT_SPLIT_GAP) -> None:
        self.graph: ObjectGraph = decode_object_graph(data)
        self.split_gap = split_gap
        self.warnings: list[str] = list(self.graph.warnings)
        self.pages: list[PageRef] = self._collect_pages()
        self._fonts: dict = {}

    @property
    def page_count(self) -> int:
        return len(self.pages)

    def _collect_pages(self) -> list[PageRef]:
        r = self.graph.resolve
        root = self.graph.root
        out: list[PageRef] = []
        seen: set[int] = set()

        def walk(node, inherited: dict, depth: int) -> None:
            node = r(node)
            if not isinstance(node, dict) or id(node) in seen or depth > 64:
                return
            seen.add(id(node))
            attrs = dict(inherited)
            for key in _INHERITABLE:
                if key in node:
                    attrs[key] = r(node[key])
            kids = r(node.get("Kids"))
            if node.get("Type") == "Pages" or (node.get("Type") != "Page" and isinstance(kids, list)):
                for kid in kids if isinstance(kids, list) else []:
                    walk(kid, attrs, depth + 1)
            else:
                out.append(PageRef(len(out) + 1, node, attrs))

        if root is not None:
            walk(root.get("Pages"), {}, 0)
        if not out:
            # page tree unusable: fall back to every page object in file order
            for num in sorted(self.graph.objects):
                obj = self.graph.objects[num]
                if isinstance(obj, dict) and obj.get("Type") == "Page":
                    attrs = {k: r(obj[k]) for k in _INHERITABLE if k in obj}
                    out.append(PageRef(len(out) + 1, obj, attrs))
            if out:
                self.warnings.append("page tree unusable; pages taken in object order")
        if not out and root is None:
            raise CorruptXref("no pages found")
        return out

    def _geometry(self, page: PageRef, warnings: list[str]):
        box = page.attrs.get("MediaBox")
        r = self.graph.resolve
        if isinstance(box, list) and len(box) == 4:
            vals = [r(v) for v in box]
            if all(isinstance(v, (int, float)) for v in vals):
                x0, y0, x1, y1 = (float(v) for v in vals)
                box = (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
                if box[2] - box[0] > 0 and box[3] - box[1] > 0:
                    rotate = page.attrs.get("Rotate")
                    rotate = int(rotate) if isinstance(rotate, (int, float)) else 0
                    if rotate % 90:
                        warnings.append(f"page {page.page_no}: /Rotate {rotate} is not a multiple of 90; ignored")
                        rotate = 0
                    return page_base_matrix(box, rotate)
        warnings.append(f"page {page.page_no}: MediaBox missing or invalid; assuming US Letter")
        return page_base_matrix(LETTER, 0)

    def _content(self, page: PageRef, warnings: list[str]) -> bytes:
        r = self.graph.resolve
        contents = r(page.obj.get("Contents"))
        streams = contents if isinstance(contents, list) else [contents]
        parts = []
        for s in streams:
            s = r(s)
            if s is None:
                continue
            if not isinstance(s, Stream):
                warnings.append(f"page {page.page_no}: content entry is not a stream; skipped")
                continue
            try:
                parts.append(self.graph.stream_data(s))
            except UnsupportedFilter as exc:
                warnings.append(f"page {page.page_no}: content stream skipped ({exc})")
        return b"\n".join(parts)

    def parse_page(self, page_no: int) -> tuple[ParsedPage, list[str]]:
        """Parse one page. Raises ``CorruptStream`` when its content is unreadable."""
        page = self.pages[page_no - 1]
        warnings: list[str] = []
        base, width, height = self._geometry(page, warnings)
        content = self._content(page, warnings)
        resources = page.attrs.get("Resources")
        if not isinstance(resources, dict):
            resources = {}
        extractor = CellExtractor(
            self.graph, width, height, base, self.split_gap, page_no, font_cache=self._fonts
        )
        result = extractor.run(content, resources)
        warnings.extend(result.warnings)
        parsed = ParsedPage(page_no, width, height, result.cells, result.bitmap_regions)
        return parsed, warnings

    def font_warnings(self) -> list[str]:
        out: list[str] = []
        for font in list(self._fonts.values()):
            out.extend(font.warnings)
        return out

    def empty_page(self, page_no: int) -> ParsedPage:
        base, width, height = self._geometry(self.pages[page_no - 1], [])
        return ParsedPage(page_no, width, height)


def parse_pdf(data: bytes, split_gap: float = DEFAULT_SPLIT_GAP) -> ParsedPdf:
    """Parse every page of a PDF into text cells.

    Pages whose content stream is corrupt are kept as empty pages, listed
    in ``failed_pages`` and reported in ``warnings``.
    """
    doc = PdfDocument(data, split_gap)
    out = ParsedPdf(warnings=list(doc.warnings))
    for page_no in range(1, doc.page_count + 1):
        try:
            page, warnings = doc.parse_page(page_no)
        except CorruptStream as exc:
            out.failed_pages.append(page_no)
            out.warnings.append(f"page {page_no}: content unreadable ({exc})")
            page, warnings = doc.empty_page(page_no), []
        out.pages.append(page)
        out.warnings.extend(warnings)
    for w in doc.font_warnings():
        if w not in out.warnings:
            out.warnings.append(w)
    return out
