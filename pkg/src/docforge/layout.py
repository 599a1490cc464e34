"""Layout prediction and post-processing.

Two sources produce ``LayoutPrediction``s: a rule-based segmenter that
works from text-cell geometry alone, and a sidecar file carrying
predictions from an external model. Either way the proposals go through
``postprocess_clusters``, which removes duplicates and grounds every
cluster in the page's text cells.
"""

from __future__ import annotations

import json
import re
import statistics
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

import jsonschema

from docforge.errors import PageMismatch, SidecarMissing, SidecarSchemaError
from docforge.model import BoundingBox, ItemLabel
from docforge.pdf.types import ParsedPage, TextCell

HEURISTIC_CONFIDENCE = 0.5
IOU_LIMIT = 0.8
CONTAINMENT_LIMIT = 0.9
ASSIGN_THRESHOLD = 0.2
KEEP_EMPTY = frozenset({ItemLabel.PICTURE, ItemLabel.TABLE, ItemLabel.FORMULA})
KEEP_BOX = frozenset({ItemLabel.PICTURE, ItemLabel.TABLE})
CLUSTER_LABELS = frozenset(
    {
        ItemLabel.TITLE, ItemLabel.SECTION_HEADER, ItemLabel.TEXT, ItemLabel.LIST_ITEM,
        ItemLabel.CAPTION, ItemLabel.FOOTNOTE, ItemLabel.FORMULA, ItemLabel.CODE,
        ItemLabel.PAGE_HEADER, ItemLabel.PAGE_FOOTER, ItemLabel.TABLE, ItemLabel.PICTURE,
    }
)

CAPTION_RE = re.compile(r"^(Figure|Table|Fig\.)\s+\d", re.IGNORECASE)
BULLET_RE = re.compile(r"^(?:[•\-*]|\d+[.)])(?:\s|$)")


class LayoutSource(str, Enum):
    HEURISTIC = "heuristic"
    SIDECAR = "sidecar"


@dataclass
class LayoutCluster:
    id: int
    label: ItemLabel
    bbox: BoundingBox
    confidence: float = HEURISTIC_CONFIDENCE
    cells: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        self.label = ItemLabel(self.label)
        if self.label not in CLUSTER_LABELS:
            raise ValueError(f"{self.label.value} is not a layout label")


@dataclass
class LayoutPrediction:
    page_no: int
    clusters: list[LayoutCluster] = field(default_factory=list)
    source: LayoutSource = LayoutSource.HEURISTIC


# ---------------------------------------------------------------------------
# line grouping
# ---------------------------------------------------------------------------


@dataclass
class Segment:
    """Cells on one baseline that sit close enough to read as one line."""

    cells: list[TextCell]
    l: float
    t: float
    r: float
    b: float
    size: float
    text: str

    @property
    def width(self) -> float:
        return self.r - self.l

    @property
    def words(self) -> int:
        return len(self.text.split())

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.l, self.t, self.r, self.b)


def _segment(cells: list[TextCell]) -> Segment:
    parts = [cells[0].text]
    for prev, cur in zip(cells, cells[1:]):
        gap = cur.bbox.l - prev.bbox.r
        parts.append((" " if gap > 0.15 * max(prev.font_size, cur.font_size) else "") + cur.text)
    # the size of the longest run speaks for the line
    size = max(cells, key=lambda c: (len(c.text), c.font_size)).font_size
    return Segment(
        list(cells),
        min(c.bbox.l for c in cells),
        min(c.bbox.t for c in cells),
        max(c.bbox.r for c in cells),
        max(c.bbox.b for c in cells),
        size,
        "".join(parts),
    )


def baseline_rows(cells: Iterable[TextCell], tolerance: float = 0.4) -> list[list[TextCell]]:
    """Cluster cells whose bottom edges lie within ``tolerance`` x font size."""
    ordered = sorted(cells, key=lambda c: (c.bbox.b, c.bbox.l, c.stream_index))
    rows: list[list[TextCell]] = []
    anchor = 0.0
    for cell in ordered:
        if rows and cell.bbox.b - anchor <= tolerance * max(cell.font_size, rows[-1][0].font_size):
            rows[-1].append(cell)
        else:
            rows.append([cell])
            anchor = cell.bbox.b
    return [sorted(r, key=lambda c: (c.bbox.l, c.stream_index)) for r in rows]


def segments_of_row(row: list[TextCell], gap: float = 1.0) -> list[Segment]:
    out: list[Segment] = []
    chain = [row[0]]
    for cell in row[1:]:
        prev = chain[-1]
        if cell.bbox.l - prev.bbox.r <= gap * max(prev.font_size, cell.font_size):
            chain.append(cell)
        else:
            out.append(_segment(chain))
            chain = [cell]
    out.append(_segment(chain))
    return out


def group_lines(cells: Iterable[TextCell]) -> list[list[Segment]]:
    """Cells to rows of segments, top to bottom."""
    return [segments_of_row(row) for row in baseline_rows(cells)]


def _h_overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    return max(0.0, min(a1, b1) - max(a0, b0))


# ---------------------------------------------------------------------------
# heuristic segmentation
# ---------------------------------------------------------------------------


def _aligned_starts(rows: list[list[Segment]], tol: float = 2.0) -> int:
    """Number of x-start positions shared by at least 60% of ``rows``."""
    starts = sorted((s.l, i) for i, row in enumerate(rows) for s in row)
    groups: list[list[tuple[float, int]]] = []
    for x, i in starts:
        if groups and x - groups[-1][0][0] <= 2 * tol:
            groups[-1].append((x, i))
        else:
            groups.append([(x, i)])
    need = 0.6 * len(rows)
    return sum(1 for g in groups if len({i for _, i in g}) >= need)


def _table_like(row: list[Segment]) -> bool:
    if len(row) < 2:
        return False
    return statistics.median(s.words for s in row) <= 4


def _detect_tables(rows: list[list[Segment]]) -> list[list[int]]:
    """Index runs of consecutive rows that form tables."""
    tables: list[list[int]] = []
    i = 0
    n = len(rows)
    while i < n:
        if not _table_like(rows[i]):
            i += 1
            continue
        run = [i]
        j = i + 1
        while j < n and _table_like(rows[j]):
            pitch = rows[j][0].b - rows[run[-1]][0].b
            size = max(s.size for s in rows[j])
            if pitch > 2.5 * size:
                break
            run.append(j)
            j += 1
        if len(run) >= 2 and _aligned_starts([rows[k] for k in run]) >= 2:
            tables.append(_extend_table(rows, run, {k for t in tables for k in t}))
            i = tables[-1][-1] + 1
        else:
            i = j if j > i + 1 else i + 1
    return tables


def _extend_table(rows: list[list[Segment]], run: list[int], taken: set[int]) -> list[int]:
    pitches = [rows[b][0].b - rows[a][0].b for a, b in zip(run, run[1:])]
    pitch = statistics.median(pitches)
    size = statistics.median(s.size for k in run for s in rows[k])
    left = min(s.l for k in run for s in rows[k])
    right = max(s.r for k in run for s in rows[k])

    def fits(k: int, ref: int) -> bool:
        if k < 0 or k >= len(rows) or k in taken:
            return False
        row = rows[k]
        # sparse rows join only at the table's own row pitch
        if abs(abs(row[0].b - rows[ref][0].b) - pitch) > 0.2 * pitch:
            return False
        for s in row:
            if abs(s.size - size) > 0.5 or s.words > 6 or CAPTION_RE.match(s.text) or BULLET_RE.match(s.text):
                return False
            if s.l < left - 2.0 or s.r > right + pitch:
                return False
        return True

    out = list(run)
    while fits(out[0] - 1, out[0]):
        out.insert(0, out[0] - 1)
    while fits(out[-1] + 1, out[-1]):
        out.append(out[-1] + 1)
    return out


@dataclass
class _Block:
    lines: list[Segment]

    @property
    def last(self) -> Segment:
        return self.lines[-1]

    @property
    def size(self) -> float:
        return self.lines[0].size

    def box(self) -> BoundingBox:
        return BoundingBox(
            min(s.l for s in self.lines), min(s.t for s in self.lines),
            max(s.r for s in self.lines), max(s.b for s in self.lines),
        )

    def cells(self) -> list[TextCell]:
        return [c for s in self.lines for c in s.cells]


def _median_leading(segs: list[Segment]) -> Optional[float]:
    dys = []
    ordered = sorted(segs, key=lambda s: (s.b, s.l))
    for i, s in enumerate(ordered):
        for o in ordered[i + 1 :]:
            dy = o.b - s.b
            if dy > 3 * s.size:
                break
            if dy > 0.4 * s.size and _h_overlap(s.l, s.r, o.l, o.r) >= 0.5 * min(s.width, o.width):
                dys.append(dy)
                break
    return statistics.median(dys) if dys else None


def _blocks(segs: list[Segment], body_size: float) -> list[_Block]:
    leading = _median_leading(segs) or 1.2 * body_size
    blocks: list[_Block] = []
    for seg in sorted(segs, key=lambda s: (s.t, s.l)):
        home = None
        if not BULLET_RE.match(seg.text) and not CAPTION_RE.match(seg.text):
            for blk in reversed(blocks):
                last = blk.last
                dy = seg.b - last.b
                if not 0 < dy < 1.4 * leading:
                    continue
                if abs(seg.size - blk.size) > 0.5:
                    continue
                if _h_overlap(seg.l, seg.r, last.l, last.r) >= 0.5 * min(seg.width, last.width):
                    home = blk
                    break
        if home is None:
            blocks.append(_Block([seg]))
        else:
            home.lines.append(seg)
    return blocks


def _weighted_median_size(cells: list[TextCell]) -> float:
    sizes = sorted((c.font_size, len(c.text)) for c in cells)
    total = sum(w for _, w in sizes)
    acc = 0
    for size, w in sizes:
        acc += w
        if 2 * acc >= total:
            return size
    return sizes[-1][0]


def _label_block(blk: _Block, page: ParsedPage, body_size: float, max_size: float) -> ItemLabel:
    box = blk.box()
    first = blk.lines[0].text
    n = len(blk.lines)
    if n <= 1 and box.b <= 0.05 * page.height:
        return ItemLabel.PAGE_HEADER
    if n <= 1 and box.t >= 0.95 * page.height:
        return ItemLabel.PAGE_FOOTER
    if CAPTION_RE.match(first):
        return ItemLabel.CAPTION
    if BULLET_RE.match(first):
        return ItemLabel.LIST_ITEM
    header_like = blk.size >= 1.15 * body_size and n <= 2
    if header_like and page.page_no == 1 and box.t <= page.height / 3 and blk.size >= max_size:
        return ItemLabel.TITLE
    if header_like:
        return ItemLabel.SECTION_HEADER
    fonts = {c.font_name for c in blk.cells()}
    if fonts and all("courier" in f.lower() or "mono" in f.lower() for f in fonts):
        return ItemLabel.CODE
    return ItemLabel.TEXT


def predict_layout_heuristic(page: ParsedPage) -> LayoutPrediction:
    """Rule-based clusters for one page; all confidences are 0.5."""
    pred = LayoutPrediction(page.page_no, [], LayoutSource.HEURISTIC)
    proposals: list[tuple[ItemLabel, BoundingBox, list[int]]] = []
    for region in page.bitmap_regions:
        proposals.append((ItemLabel.PICTURE, region, []))
    if page.cells:
        rows = group_lines(page.cells)
        body_size = _weighted_median_size(page.cells)
        max_size = max(c.font_size for c in page.cells)
        in_table: set[int] = set()
        for run in _detect_tables(rows):
            segs = [s for k in run for s in rows[k]]
            box = BoundingBox(min(s.l for s in segs), min(s.t for s in segs),
                              max(s.r for s in segs), max(s.b for s in segs))
            proposals.append((ItemLabel.TABLE, box, sorted(c.stream_index for s in segs for c in s.cells)))
            in_table.update(run)
        rest = [s for k, row in enumerate(rows) if k not in in_table for s in row]
        for blk in _blocks(rest, body_size):
            label = _label_block(blk, page, body_size, max_size)
            proposals.append((label, blk.box(), sorted(c.stream_index for c in blk.cells())))
    proposals.sort(key=lambda p: (p[1].t, p[1].l, p[0].value))
    for i, (label, box, cells) in enumerate(proposals):
        pred.clusters.append(LayoutCluster(i, label, box, HEURISTIC_CONFIDENCE, cells))
    return pred


# ---------------------------------------------------------------------------
# sidecar predictions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _sidecar_schema() -> dict:
    text = resources.files("docforge").joinpath("schemas/sidecar.schema.json").read_text("utf-8")
    return json.loads(text)


class Sidecar:
    """A validated sidecar file, indexed by page number."""

    def __init__(self, payload: dict) -> None:
        try:
            jsonschema.validate(payload, _sidecar_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise SidecarSchemaError(f"{where}: {exc.message}") from None
        self.pages: dict[int, dict] = {}
        for entry in payload["pages"]:
            if entry["page_no"] in self.pages:
                raise SidecarSchemaError(f"page {entry['page_no']} listed twice")
            self.pages[entry["page_no"]] = entry

    @classmethod
    def load(cls, path: Union[str, Path]) -> Sidecar:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise SidecarMissing(f"sidecar not found: {path}") from None
        try:
            payload = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise SidecarSchemaError(f"sidecar is not valid JSON: {exc}") from None
        return cls(payload)

    def prediction(self, page_no: int, page_size: Optional[tuple[float, float]] = None) -> LayoutPrediction:
        entry = self.pages.get(page_no)
        if entry is None:
            return LayoutPrediction(page_no, [], LayoutSource.SIDECAR)
        if page_size is not None:
            w, h = page_size
            if abs(entry["width"] - w) > 1.0 or abs(entry["height"] - h) > 1.0:
                raise PageMismatch(
                    f"page {page_no}: sidecar size {entry['width']}x{entry['height']} "
                    f"differs from parsed size {w}x{h}"
                )
        clusters = [
            LayoutCluster(i, ItemLabel(c["label"]), BoundingBox(c["l"], c["t"], c["r"], c["b"]),
                          float(c["confidence"]))
            for i, c in enumerate(entry["clusters"])
        ]
        return LayoutPrediction(page_no, clusters, LayoutSource.SIDECAR)


def load_sidecar_predictions(path: Union[str, Path], page_no: int,
                             page_size: Optional[tuple[float, float]] = None) -> LayoutPrediction:
    return Sidecar.load(path).prediction(page_no, page_size)


# ---------------------------------------------------------------------------
# post-processing
# ---------------------------------------------------------------------------


def containment(a: BoundingBox, b: BoundingBox) -> float:
    """Share of the smaller box covered by the larger; 0 if the smaller is degenerate."""
    small = min(a.area, b.area)
    if small <= 0:
        return 0.0
    return a.intersection_area(b) / small


def _conflict(a: BoundingBox, b: BoundingBox) -> bool:
    return a.iou(b) > IOU_LIMIT or containment(a, b) >= CONTAINMENT_LIMIT


def _rank(c: LayoutCluster):
    return (-c.confidence, -c.bbox.area, c.id)


def remove_overlaps(clusters: list[LayoutCluster]) -> list[LayoutCluster]:
    """Greedy suppression in rank order (confidence, then area, then id)."""
    kept: list[LayoutCluster] = []
    for c in sorted(clusters, key=_rank):
        if not any(_conflict(c.bbox, k.bbox) for k in kept):
            kept.append(c)
    return sorted(kept, key=lambda c: c.id)


def _overlap_fraction(cell: BoundingBox, box: BoundingBox) -> float:
    area = cell.area
    if area <= 0:
        cx, cy = cell.center
        return 1.0 if box.l <= cx <= box.r and box.t <= cy <= box.b else 0.0
    return cell.intersection_area(box) / area


def assign_cells(clusters: list[LayoutCluster], cells: list[TextCell]) -> dict[int, Optional[int]]:
    """Map stream_index to the id of the cluster covering the largest share of it."""
    ordered = sorted(clusters, key=lambda c: c.id)
    out: dict[int, Optional[int]] = {}
    for cell in cells:
        best, best_frac = None, ASSIGN_THRESHOLD
        cb = cell.bbox
        for c in ordered:
            if c.bbox.r < cb.l or c.bbox.l > cb.r or c.bbox.b < cb.t or c.bbox.t > cb.b:
                continue
            frac = _overlap_fraction(cb, c.bbox)
            if frac > best_frac or (best is None and frac >= best_frac):
                best, best_frac = c.id, frac
        out[cell.stream_index] = best
    return out


def postprocess_clusters(prediction: LayoutPrediction, page: ParsedPage) -> list[LayoutCluster]:
    """Deduplicate proposals and ground them in the page's text cells.

    Survivors of overlap removal claim cells by largest overlap share;
    cells nobody claims become one new Text cluster per line. Boxes are
    then tightened to their cells, and if tightening makes two clusters
    collide again, the lower-ranked one is folded into the other so the
    result stays a partition of the cells.
    """
    if prediction.page_no != page.page_no:
        raise ValueError(f"prediction for page {prediction.page_no} applied to page {page.page_no}")
    survivors = [
        LayoutCluster(c.id, c.label, c.bbox, c.confidence, []) for c in remove_overlaps(prediction.clusters)
    ]
    by_id = {c.id: c for c in survivors}
    owner = assign_cells(survivors, page.cells)
    orphans = []
    for cell in page.cells:
        cid = owner[cell.stream_index]
        if cid is None:
            orphans.append(cell)
        else:
            by_id[cid].cells.append(cell.stream_index)
    next_id = max((c.id for c in survivors), default=-1) + 1
    for line in sorted(
        (seg for row in group_lines(orphans) for seg in row), key=lambda s: min(c.stream_index for c in s.cells)
    ):
        cl = LayoutCluster(next_id, ItemLabel.TEXT, line.box, HEURISTIC_CONFIDENCE,
                           [c.stream_index for c in line.cells])
        survivors.append(cl)
        next_id += 1

    cells_by_index = {c.stream_index: c for c in page.cells}
    out: list[LayoutCluster] = []
    for c in survivors:
        c.cells.sort()
        if c.cells:
            tight = BoundingBox.enclosing([cells_by_index[i].bbox for i in c.cells])
            c.bbox = c.bbox.union(tight) if c.label in KEEP_BOX else tight
        elif c.label not in KEEP_EMPTY:
            continue
        out.append(c)
    return _resolve_collisions(out)


def _resolve_collisions(clusters: list[LayoutCluster]) -> list[LayoutCluster]:
    clusters = sorted(clusters, key=_rank)
    changed = True
    while changed:
        changed = False
        for i, a in enumerate(clusters):
            for b in clusters[i + 1 :]:
                if a.bbox.iou(b.bbox) > IOU_LIMIT:
                    a.cells = sorted(a.cells + b.cells)
                    a.bbox = a.bbox.union(b.bbox)
                    clusters.remove(b)
                    changed = True
                    break
            if changed:
                break
    return sorted(clusters, key=lambda c: c.id)
