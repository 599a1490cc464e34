"""A tiny typesetter producing labelled page layouts.

``LayoutBuilder`` places titles, headings, paragraphs, lists, tables,
captions and figures into one or two columns and records, for every
block, its true label, box and position in the intended reading order.
Fixtures built this way let the layout engine and the reading-order pass
be scored against the placement intent instead of against themselves.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from docforge.synth.pdfwriter import SynthPdf, text_width

WORDS = (
    "data model page layout parser table column row cell text figure value "
    "result method stage order block token section index report sample "
    "measure signal format source output input graph field record "
    "document vector chart number series system region label score"
).split()

BODY = 10.0
LEADING = 12.0
BLOCK_GAP = 10.0
HEADING = 14.0
TITLE = 24.0
CAPTION = 9.0
FURNITURE = 8.0
ROW_PITCH = 16.0
COL_GAP = 18.0


@dataclass
class Block:
    """Ground truth for one typeset block (TopLeft coordinates)."""

    label: str
    page_no: int
    l: float
    t: float
    r: float
    b: float
    text: str
    order: Optional[int] = None  # None for page furniture
    lines: int = 1
    table: Optional[list[list[str]]] = None


@dataclass
class Column:
    x0: float
    x1: float
    y: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0


def words(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n))


def wrap(text: str, width: float, size: float, font: str = "Helvetica") -> list[str]:
    lines: list[str] = []
    cur = ""
    for w in text.split():
        cand = f"{cur} {w}" if cur else w
        if cur and text_width(font, cand, size) > width:
            lines.append(cur)
            cur = w
        else:
            cur = cand
    if cur:
        lines.append(cur)
    return lines


class LayoutBuilder:
    def __init__(self, pdf: Optional[SynthPdf] = None, width: float = 612.0, height: float = 792.0) -> None:
        self.pdf = pdf or SynthPdf()
        self.width = width
        self.height = height
        self.blocks: list[Block] = []
        self.page = None
        self._order = 0
        self.columns: list[Column] = []
        self.col = 0

    # -- page and column control -------------------------------------------

    def new_page(self, columns: int = 1, top: float = 72.0, gutter: float = 36.0) -> None:
        self.page = self.pdf.page(self.width, self.height)
        self.set_columns(columns, top, gutter)

    def set_columns(self, columns: int, top: float, gutter: float = 36.0) -> None:
        margin = 72.0
        usable = self.width - 2 * margin
        if columns == 1:
            self.columns = [Column(margin, self.width - margin, top)]
        else:
            w = (usable - gutter) / 2
            self.columns = [
                Column(margin, margin + w, top),
                Column(margin + w + gutter, self.width - margin, top),
            ]
        self.col = 0

    def next_column(self) -> None:
        self.col += 1

    @property
    def cursor(self) -> Column:
        return self.columns[self.col]

    def bottom_y(self) -> float:
        return max(c.y for c in self.columns)

    def _record(self, label: str, l, t, r, b, text: str, lines: int = 1, furniture: bool = False, **kw) -> Block:
        order = None
        if not furniture:
            order = self._order
            self._order += 1
        blk = Block(label, self.page.page_no, l, t, r, b, text, order, lines, **kw)
        self.blocks.append(blk)
        return blk

    def _lines(self, lines: list[str], size: float, font: str, label: str, indent: float = 0.0,
               hanging: float = 0.0, leading: Optional[float] = None, metrics: str = "Helvetica") -> Block:
        col = self.cursor
        leading = leading or size * 1.2
        top = col.y
        baseline = col.y + 0.8 * size
        r = col.x0
        for i, line in enumerate(lines):
            x = col.x0 + indent + (hanging if i else 0.0)
            self.page.text(x, baseline, line, font=font, size=size)
            r = max(r, x + text_width(metrics, line, size))
            baseline += leading
        bottom = baseline - leading + 0.2 * size
        col.y = bottom + BLOCK_GAP
        return self._record(label, col.x0 + indent, top, r, bottom, " ".join(lines), len(lines))

    # -- block types --------------------------------------------------------

    def title(self, text: str) -> Block:
        return self._lines([text], TITLE, "F2", "title", metrics="Helvetica-Bold")

    def heading(self, text: str, size: float = HEADING) -> Block:
        self.cursor.y += 4.0
        return self._lines([text], size, "F2", "section-header", metrics="Helvetica-Bold")

    def paragraph(self, text: str) -> Block:
        return self._lines(wrap(text, self.cursor.width, BODY), BODY, "F1", "text", leading=LEADING)

    def list_items(self, items: list[str], ordered: bool = False) -> list[Block]:
        out = []
        for i, item in enumerate(items):
            marker = f"{i + 1}." if ordered else "•"
            lines = wrap(f"{marker} {item}", self.cursor.width - 12, BODY)
            out.append(self._lines(lines, BODY, "F1", "list-item", indent=12.0, hanging=10.0, leading=LEADING))
            self.cursor.y -= BLOCK_GAP - 4.0
        self.cursor.y += BLOCK_GAP - 4.0
        return out

    def code(self, lines: list[str]) -> Block:
        return self._lines(lines, 9.0, "F3", "code", leading=11.0, metrics="Courier")

    def caption(self, text: str) -> Block:
        return self._lines(wrap(text, self.cursor.width, CAPTION), CAPTION, "F1", "caption", leading=11.0)

    def figure(self, height: float = 120.0, width: Optional[float] = None) -> Block:
        col = self.cursor
        w = width or col.width * 0.8
        l = col.x0 + (col.width - w) / 2
        t = col.y
        self.page.image(l, t, l + w, t + height)
        col.y = t + height + 6.0
        return self._record("picture", l, t, l + w, t + height, "")

    def table(self, rows: list[list[str]], bold_header: bool = True) -> Block:
        col = self.cursor
        ncols = max(len(r) for r in rows)
        widths = [0.0] * ncols
        for row in rows:
            for j, cell in enumerate(row):
                widths[j] = max(widths[j], text_width("Helvetica-Bold", cell, BODY))
        xs = [col.x0]
        for w in widths[:-1]:
            xs.append(xs[-1] + w + COL_GAP)
        top = col.y
        baseline = col.y + 0.8 * BODY
        r = col.x0
        for i, row in enumerate(rows):
            for j, cell in enumerate(row):
                if not cell:
                    continue
                font, metrics = ("F2", "Helvetica-Bold") if (bold_header and i == 0) else ("F1", "Helvetica")
                self.page.text(xs[j], baseline, cell, font=font, size=BODY)
                r = max(r, xs[j] + text_width(metrics, cell, BODY))
            baseline += ROW_PITCH
        bottom = baseline - ROW_PITCH + 0.2 * BODY
        col.y = bottom + BLOCK_GAP + 4.0
        text = " ".join(c for row in rows for c in row if c)
        return self._record("table", col.x0, top, r, bottom, text, len(rows), table=rows)

    def space(self, pts: float) -> None:
        self.cursor.y += pts

    def header(self, text: str) -> Block:
        y = 30.0
        self.page.text(72.0, y, text, font="F1", size=FURNITURE)
        w = text_width("Helvetica", text, FURNITURE)
        return self._record("page-header", 72.0, y - 0.8 * FURNITURE, 72.0 + w, y + 0.2 * FURNITURE, text,
                            furniture=True)

    def footer(self, text: str) -> Block:
        y = self.height - 24.0
        w = text_width("Helvetica", text, FURNITURE)
        x = (self.width - w) / 2
        self.page.text(x, y, text, font="F1", size=FURNITURE)
        return self._record("page-footer", x, y - 0.8 * FURNITURE, x + w, y + 0.2 * FURNITURE, text,
                            furniture=True)

    def to_bytes(self, **kw) -> bytes:
        return self.pdf.to_bytes(**kw)


# ---------------------------------------------------------------------------
# random documents
# ---------------------------------------------------------------------------


def random_table(rng: random.Random, nrows: int, ncols: int) -> list[list[str]]:
    header = [rng.choice(WORDS).capitalize() for _ in range(ncols)]
    rows = [header]
    for _ in range(nrows - 1):
        row = [rng.choice(WORDS)]
        row += [f"{rng.uniform(0, 100):.1f}" for _ in range(ncols - 1)]
        rows.append(row)
    return rows


def _single_column_page(b: LayoutBuilder, rng: random.Random, first: bool, with_table: bool,
                        with_figure: bool) -> None:
    if first:
        b.title(words(rng, 4).title())
    room = b.height - 90.0
    section = 1
    placed_table = placed_figure = False
    while True:
        kind = rng.random()
        y = b.cursor.y
        if y > room - 140:
            break
        if with_table and not placed_table and y > 150:
            b.caption(f"Table {section}: {words(rng, 5)}")
            b.table(random_table(rng, rng.randint(3, 5), rng.randint(3, 4)))
            placed_table = True
        elif with_figure and not placed_figure and y > 200 and y < room - 220:
            b.figure(rng.uniform(80, 140))
            b.caption(f"Figure {section}. {words(rng, 6)}")
            placed_figure = True
        elif kind < 0.25:
            b.heading(f"{section} {words(rng, 3).title()}")
            section += 1
        elif kind < 0.40:
            b.list_items([words(rng, rng.randint(4, 9)) for _ in range(rng.randint(2, 4))],
                         ordered=rng.random() < 0.4)
        else:
            b.paragraph(words(rng, rng.randint(25, 70)) + ".")


def _two_column_page(b: LayoutBuilder, rng: random.Random, first: bool) -> None:
    top = 72.0
    if first:
        b.title(words(rng, 4).title())
        top = b.cursor.y
    b.set_columns(2, top)
    limit = b.height - 100.0
    for ci in range(2):
        if ci:
            b.next_column()
            b.space(rng.uniform(3.0, 6.0))  # stagger paragraph gaps between columns
        if rng.random() < 0.5:
            b.heading(words(rng, 2).title())
        while b.cursor.y < limit - 110:
            b.paragraph(words(rng, rng.randint(20, 45)) + ".")


def random_layout_document(seed: int, pages: int = 2, two_column: Optional[bool] = None,
                           tables: bool = True, figures: bool = True, furniture: bool = True,
                           xref: str = "classic") -> tuple[bytes, list[Block]]:
    """Build a multi-page document; returns the PDF bytes and its blocks."""
    rng = random.Random(seed)
    b = LayoutBuilder()
    for p in range(pages):
        b.new_page()
        if furniture:
            b.header(f"{words(rng, 3).title()} report")
        two = two_column if two_column is not None else rng.random() < 0.3
        if two:
            _two_column_page(b, rng, p == 0)
        else:
            _single_column_page(b, rng, p == 0, tables and rng.random() < 0.7, figures and rng.random() < 0.5)
        if furniture:
            b.footer(f"Page {p + 1}")
    return b.to_bytes(xref=xref), b.blocks


@dataclass
class Corpus:
    files: dict[str, bytes] = field(default_factory=dict)
    blocks: dict[str, list[Block]] = field(default_factory=dict)


def synthetic_corpus(n_docs: int = 10, seed: int = 0, pages: tuple[int, int] = (1, 3),
                     tables: bool = True) -> Corpus:
    rng = random.Random(seed)
    corpus = Corpus()
    for i in range(n_docs):
        name = f"doc{i:03d}.pdf"
        data, blocks = random_layout_document(
            rng.randrange(1 << 30), pages=rng.randint(*pages), tables=tables
        )
        corpus.files[name] = data
        corpus.blocks[name] = blocks
    return corpus
