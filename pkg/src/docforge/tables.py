"""Table structure recovery from text-cell geometry.

``infer_structure`` builds the row/column grid of a Table cluster,
``match_cells`` fills grid cells with the text of the page cells whose
centres fall inside them, and ``classify_headers`` marks header rows and
columns. ``recognize_table`` chains the three.
"""

from __future__ import annotations

import bisect
import math
import re
import statistics
from dataclasses import dataclass
from typing import Optional

from docforge.layout import LayoutCluster
from docforge.model import BoundingBox, CellRole, TableCellSpec, TableStructure
from docforge.pdf.types import TextCell

NUMERIC_RE = re.compile(r"^[\d\s.,%−$€-]+$")
ROW_TOLERANCE = 0.4


def is_numeric(text: str) -> bool:
    return bool(NUMERIC_RE.match(text))


@dataclass
class _Unit:
    """Same-row cells close enough to be one table entry."""

    cells: list[TextCell]
    l: float
    r: float
    row: int


def _rows(cells: list[TextCell], tol: float) -> list[list[TextCell]]:
    ordered = sorted(cells, key=lambda c: (c.bbox.b, c.bbox.l, c.stream_index))
    rows: list[list[TextCell]] = []
    anchor = -math.inf
    for cell in ordered:
        if rows and cell.bbox.b - anchor <= tol:
            rows[-1].append(cell)
        else:
            rows.append([cell])
            anchor = cell.bbox.b
    return [sorted(r, key=lambda c: (c.bbox.l, c.stream_index)) for r in rows]


def column_gap(cells: list[TextCell]) -> float:
    """Whitespace wider than this separates columns: max(4 pt, half a median glyph)."""
    widths = [c.bbox.width / len(c.text) for c in cells if c.text]
    char = statistics.median(widths) if widths else 0.0
    return max(4.0, 0.5 * char)


def _units(rows: list[list[TextCell]], gap: float) -> list[list[_Unit]]:
    out = []
    for i, row in enumerate(rows):
        units: list[_Unit] = []
        for cell in row:
            if units and cell.bbox.l - units[-1].r <= gap:
                u = units[-1]
                u.cells.append(cell)
                u.r = max(u.r, cell.bbox.r)
            else:
                units.append(_Unit([cell], cell.bbox.l, cell.bbox.r, i))
        out.append(units)
    return out


def _overlaps(a: _Unit, b: _Unit) -> bool:
    return min(a.r, b.r) > max(a.l, b.l)


def _spanning(units: list[list[_Unit]]) -> set[int]:
    """ids of units that cover two or more separate units of some other row."""
    out = set()
    for i, row in enumerate(units):
        for u in row:
            for j, other in enumerate(units):
                if j != i and sum(1 for v in other if _overlaps(u, v)) >= 2:
                    out.add(id(u))
                    break
    return out


def column_bands(intervals: list[tuple[float, float]], gap: float) -> list[tuple[float, float]]:
    """Sweep sorted intervals; a gap wider than ``gap`` starts a new band."""
    bands: list[list[float]] = []
    for l, r in sorted(intervals):
        if bands and l - bands[-1][1] <= gap:
            bands[-1][1] = max(bands[-1][1], r)
        else:
            bands.append([l, r])
    return [(a, b) for a, b in bands]


def _edges(extents: list[tuple[float, float]], lo: float, hi: float) -> list[float]:
    """Band boundaries tiled at midpoints between neighbours, clamped to [lo, hi]."""
    edges = [lo]
    for (_, a_hi), (b_lo, _) in zip(extents, extents[1:]):
        edges.append((a_hi + b_lo) / 2.0)
    edges.append(hi)
    return edges


def infer_structure(cluster: LayoutCluster, page_cells: list[TextCell],
                    warnings: Optional[list[str]] = None) -> TableStructure:
    """Grid of a Table cluster. Cells carry their band rectangles, no text yet."""
    index = set(cluster.cells)
    cells = [c for c in page_cells if c.stream_index in index]
    if not cells:
        if warnings is not None:
            warnings.append(f"table cluster {cluster.id} has no cells; empty structure")
        return TableStructure(0, 0, [])
    tol = ROW_TOLERANCE * statistics.median(c.font_size for c in cells)
    rows = _rows(cells, tol)
    gap = column_gap(cells)
    units = _units(rows, gap)
    span_ids = _spanning(units)
    plain = [(u.l, u.r) for row in units for u in row if id(u) not in span_ids]
    if not plain:
        plain = [(u.l, u.r) for row in units for u in row]
    bands = column_bands(plain, gap)
    ncols, nrows = len(bands), len(rows)

    box = cluster.bbox
    x_edges = _edges(bands, min(box.l, bands[0][0]), max(box.r, bands[-1][1]))
    row_ext = [(min(c.bbox.t for c in r), max(c.bbox.b for c in r)) for r in rows]
    y_edges = _edges(row_ext, min(box.t, row_ext[0][0]), max(box.b, row_ext[-1][1]))

    taken: dict[tuple[int, int], tuple[int, int]] = {}
    for i, row in enumerate(units):
        spans: list[list[int]] = []
        for u in row:
            hit = [j for j, (bl, br) in enumerate(bands) if min(u.r, br) > max(u.l, bl)]
            if not hit:
                mid = (u.l + u.r) / 2
                hit = [min(range(ncols), key=lambda j: abs((bands[j][0] + bands[j][1]) / 2 - mid))]
            lo, hi = hit[0], hit[-1]
            if spans and lo <= spans[-1][1]:
                spans[-1][1] = max(spans[-1][1], hi)
            else:
                spans.append([lo, hi])
        for lo, hi in spans:
            taken[(i, lo)] = (lo, hi)

    specs: list[TableCellSpec] = []
    for i in range(nrows):
        j = 0
        while j < ncols:
            lo, hi = taken.get((i, j), (j, j))
            specs.append(TableCellSpec(
                start_row=i, start_col=lo, col_span=hi - lo + 1,
                bbox=BoundingBox(x_edges[lo], y_edges[i], x_edges[hi + 1], y_edges[i + 1]),
            ))
            j = hi + 1
    return TableStructure(nrows, ncols, specs)


def match_cells(structure: TableStructure, page_cells: list[TextCell],
                warnings: Optional[list[str]] = None) -> TableStructure:
    """Fill grid cells with the page cells whose centres fall in their rectangles.

    A centre exactly on a band boundary goes to the lower-index band.
    Text is joined in stream order with single spaces; the grid cell box
    becomes the union of its sources (``None`` when it has none).
    """
    if not structure.cells:
        if page_cells and warnings is not None:
            warnings.append(f"{len(page_cells)} cell(s) could not be placed in an empty table")
        return TableStructure(structure.num_rows, structure.num_cols, [])
    grid = structure.grid()
    col_ends: list[float] = []
    row_ends: list[float] = []
    for j in range(structure.num_cols):
        spec = next((c for c in structure.cells if c.start_col == j and c.col_span == 1 and c.bbox), None)
        col_ends.append(spec.bbox.r if spec else math.inf)
    for i in range(structure.num_rows):
        spec = next((c for c in structure.cells if c.start_row == i and c.row_span == 1 and c.bbox), None)
        row_ends.append(spec.bbox.b if spec else math.inf)
    col_ends = _monotone(col_ends)
    row_ends = _monotone(row_ends)
    left = min((c.bbox.l for c in structure.cells if c.bbox), default=-math.inf)
    top = min((c.bbox.t for c in structure.cells if c.bbox), default=-math.inf)

    sources: dict[int, list[TextCell]] = {}
    key = {id(c): n for n, c in enumerate(structure.cells)}
    for cell in sorted(page_cells, key=lambda c: c.stream_index):
        cx, cy = cell.bbox.center
        j = bisect.bisect_left(col_ends, cx)
        i = bisect.bisect_left(row_ends, cy)
        if cx < left or cy < top or j >= structure.num_cols or i >= structure.num_rows:
            target = _nearest(structure, cx, cy)
            if warnings is not None:
                warnings.append(f"cell {cell.stream_index} ({cell.text!r}) outside the table grid; "
                                f"placed in nearest cell")
        else:
            target = grid[i][j]
        sources.setdefault(key[id(target)], []).append(cell)

    out = []
    for n, spec in enumerate(structure.cells):
        src = sources.get(n, [])
        out.append(TableCellSpec(
            start_row=spec.start_row, start_col=spec.start_col,
            row_span=spec.row_span, col_span=spec.col_span, role=spec.role,
            text=" ".join(c.text for c in src),
            bbox=BoundingBox.enclosing([c.bbox for c in src]) if src else None,
            source_cells=[c.stream_index for c in src],
        ))
    return TableStructure(structure.num_rows, structure.num_cols, out)


def _monotone(ends: list[float]) -> list[float]:
    out = []
    cur = -math.inf
    for e in ends:
        cur = max(cur, e)
        out.append(cur)
    return out


def _nearest(structure: TableStructure, x: float, y: float) -> TableCellSpec:
    def dist(spec: TableCellSpec) -> tuple[float, int, int]:
        if spec.bbox is None:
            return (math.inf, spec.start_row, spec.start_col)
        cx, cy = spec.bbox.center
        return (math.hypot(cx - x, cy - y), spec.start_row, spec.start_col)

    return min(structure.cells, key=dist)


def classify_headers(structure: TableStructure) -> TableStructure:
    """Mark the column-header row and the row-header column."""
    cells = [
        TableCellSpec(c.start_row, c.start_col, c.row_span, c.col_span, CellRole.BODY,
                      c.text, c.bbox, list(c.source_cells))
        for c in structure.cells
    ]
    if not cells:
        return TableStructure(structure.num_rows, structure.num_cols, cells)
    row0 = [c for c in cells if c.start_row == 0]
    body = [c for c in cells if c.start_row > 0]

    col_header = any(c.col_span > 1 for c in row0)
    if not col_header and body:
        head_text = [c.text for c in row0 if c.text.strip()]
        numeric_cols = 0
        for j in range(structure.num_cols):
            vals = [c.text for c in body if c.start_col == j and c.text.strip()]
            if vals and 2 * sum(is_numeric(v) for v in vals) > len(vals):
                numeric_cols += 1
        col_header = (
            bool(head_text)
            and not any(is_numeric(t) for t in head_text)
            and 2 * numeric_cols >= structure.num_cols
        )
    if col_header:
        for c in row0:
            c.role = CellRole.COLUMN_HEADER

    rest = [c for c in cells if c.role is CellRole.BODY]
    col0 = [c for c in rest if c.start_col == 0 and c.text.strip()]
    others = [c for c in rest if c.start_col > 0 and c.text.strip()]
    if col0 and others:
        non_numeric = sum(not is_numeric(c.text) for c in col0)
        numeric = sum(is_numeric(c.text) for c in others)
        if non_numeric >= 0.8 * len(col0) and numeric >= 0.5 * len(others):
            for c in col0:
                c.role = CellRole.ROW_HEADER
    return TableStructure(structure.num_rows, structure.num_cols, cells)


def recognize_table(cluster: LayoutCluster, page_cells: list[TextCell],
                    warnings: Optional[list[str]] = None) -> TableStructure:
    index = set(cluster.cells)
    cells = [c for c in page_cells if c.stream_index in index]
    structure = infer_structure(cluster, cells, warnings)
    return classify_headers(match_cells(structure, cells, warnings))
