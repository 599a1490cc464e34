"""Turn per-page layout results into one DoclingDocument."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Optional

from docforge.hierarchy import SectionStack
from docforge.layout import LayoutCluster, baseline_rows, segments_of_row
from docforge.model import (
    FURNITURE,
    FURNITURE_LABELS,
    DoclingDocument,
    DocumentOrigin,
    ItemLabel,
    NodeRef,
    Provenance,
    TableStructure,
    new_document,
)
from docforge.pdf.types import ParsedPage, TextCell
from docforge.pipeline.reading_order import match_captions, reading_order
from docforge.profile import StageTimer

ORDERED_RE = re.compile(r"^\d+[.)]")
MAX_SECTION_LEVEL = 3


@dataclass
class PageResult:
    page_no: int
    page: Optional[ParsedPage] = None
    clusters: list[LayoutCluster] = field(default_factory=list)
    # table cluster id -> recovered structure (absent when table structure is off)
    tables: dict[int, TableStructure] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    timer: StageTimer = field(default_factory=StageTimer)
    wall_ns: int = 0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def cluster_text(cluster: LayoutCluster, cells: dict[int, TextCell]) -> str:
    """Text of a cluster read line by line; code keeps its line breaks."""
    own = [cells[i] for i in cluster.cells if i in cells]
    if not own:
        return ""
    lines = [" ".join(seg.text for seg in segments_of_row(row)) for row in baseline_rows(own)]
    sep = "\n" if cluster.label is ItemLabel.CODE else " "
    return sep.join(line for line in lines if line)


def _cluster_size(cluster: LayoutCluster, cells: dict[int, TextCell]) -> float:
    sizes = [cells[i].font_size for i in cluster.cells if i in cells]
    return round(max(sizes) * 2) / 2 if sizes else 0.0


def section_levels(results: list[PageResult]) -> dict[float, int]:
    """Distinct header font sizes, largest first, mapped to levels 1..3."""
    sizes = set()
    for res in results:
        if res.page is None:
            continue
        cells = {c.stream_index: c for c in res.page.cells}
        for cl in res.clusters:
            if cl.label is ItemLabel.SECTION_HEADER:
                sizes.add(_cluster_size(cl, cells))
    return {s: min(rank + 1, MAX_SECTION_LEVEL) for rank, s in enumerate(sorted(sizes, reverse=True))}


class _Assembler:
    def __init__(self, doc: DoclingDocument, levels: dict[float, int]) -> None:
        self.doc = doc
        self.levels = levels
        self.sections = SectionStack(doc)
        self.open_list: Optional[tuple[Optional[NodeRef], NodeRef]] = None  # (parent, list group)

    def page(self, res: PageResult) -> None:
        cells = {c.stream_index: c for c in res.page.cells}
        body = [c for c in res.clusters if c.label not in FURNITURE_LABELS]
        furniture = sorted((c for c in res.clusters if c.label in FURNITURE_LABELS),
                           key=lambda c: (c.bbox.t, c.bbox.l, c.id))
        for cl in furniture:
            text = cluster_text(cl, cells)
            self.doc.add_text(cl.label, text, FURNITURE, self._prov(res.page_no, cl, text))

        ordered = reading_order(body)
        captions = match_captions(ordered)
        caption_of = {tgt: cap for cap, tgt in captions.items()}
        by_id = {c.id: c for c in ordered}
        for cl in ordered:
            if cl.id in captions:
                continue  # emitted with its target
            self._emit(res, cl, cells, by_id.get(caption_of.get(cl.id, -1)))

    @staticmethod
    def _prov(page_no: int, cl: LayoutCluster, text: str) -> list[Provenance]:
        return [Provenance(page_no, cl.bbox, (0, len(text)))]

    def _emit(self, res: PageResult, cl: LayoutCluster, cells: dict[int, TextCell],
              caption: Optional[LayoutCluster]) -> None:
        label = cl.label
        text = cluster_text(cl, cells)
        prov = self._prov(res.page_no, cl, text)
        if label is not ItemLabel.LIST_ITEM:
            self.open_list = None

        if label is ItemLabel.TITLE:
            self.sections.reset()
            self.doc.add_text(label, text, None, prov)
        elif label is ItemLabel.SECTION_HEADER:
            level = self.levels.get(_cluster_size(cl, cells), MAX_SECTION_LEVEL)
            self.sections.heading(text, level, prov)
        elif label is ItemLabel.LIST_ITEM:
            parent = self.sections.parent
            if self.open_list is None or self.open_list[0] != parent:
                ordered = bool(ORDERED_RE.match(text))
                group = self.doc.add_group(ItemLabel.LIST, "ordered-list" if ordered else "list", parent)
                self.open_list = (parent, group)
            self.doc.add_text(label, text, self.open_list[1], prov)
        elif label is ItemLabel.TABLE:
            data = res.tables.get(cl.id, TableStructure())
            ref = self.doc.add_table(data, self.sections.parent, [Provenance(res.page_no, cl.bbox)])
            self._caption(res, ref, caption, cells)
        elif label is ItemLabel.PICTURE:
            ref = self.doc.add_picture(self.sections.parent, [Provenance(res.page_no, cl.bbox)])
            self._caption(res, ref, caption, cells)
        else:
            self.doc.add_text(label, text, self.sections.parent, prov)

    def _caption(self, res: PageResult, target: NodeRef, caption: Optional[LayoutCluster],
                 cells: dict[int, TextCell]) -> None:
        if caption is None:
            return
        text = cluster_text(caption, cells)
        self.doc.add_text(ItemLabel.CAPTION, text, target, self._prov(res.page_no, caption, text))


def assemble(results: list[PageResult], name: str = "", origin: Optional[DocumentOrigin] = None,
             timed: bool = True) -> DoclingDocument:
    """Build the document from page results taken in page order.

    Failed pages contribute nothing. Each page's assembly time is added
    to that page's timer.
    """
    doc = new_document(name, origin)
    ordered = sorted(results, key=lambda r: r.page_no)
    asm = _Assembler(doc, section_levels(ordered))
    for res in ordered:
        if res.failed or res.page is None:
            continue
        start = time.perf_counter_ns()
        asm.page(res)
        if timed:
            res.timer.add("assembly", time.perf_counter_ns() - start)
    return doc
