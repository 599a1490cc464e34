"""Content-stream interpretation into positioned text cells.

The interpreter tracks the graphics and text state needed for glyph
placement and nothing else: colours, paths and clipping are ignored.
Glyph positions are computed in device space, which here means PDF user
space of the displayed page (MediaBox offset and /Rotate folded into the
base matrix), and converted to TopLeft boxes when a cell is closed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from docforge.errors import CorruptStream, UnsupportedFilter
from docforge.model import BoundingBox
from docforge.pdf.fonts import PdfFont
from docforge.pdf.objects import Lexer, PdfSyntaxError, Stream
from docforge.pdf.types import TextCell
from docforge.pdf.xref import ObjectGraph

Matrix = tuple[float, float, float, float, float, float]
IDENTITY: Matrix = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

DEFAULT_SPLIT_GAP = 1.0
# fraction of the font size that counts as a baseline change
BASELINE_TOLERANCE = 0.05
# unexplained pen advance (in em) that is read as a word break
SPACE_GAP = 0.15
MAX_FORM_DEPTH = 12

_EI_RE = re.compile(rb"[\x00\t\n\x0c\r ]EI(?=[\x00\t\n\x0c\r ]|$)")


def mat_mul(m1: Matrix, m2: Matrix) -> Matrix:
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


def page_base_matrix(mediabox: tuple[float, float, float, float], rotate: int) -> tuple[Matrix, float, float]:
    """Matrix from user space to the displayed page plus its width and height."""
    x0, y0, x1, y1 = mediabox
    w, h = x1 - x0, y1 - y0
    shift: Matrix = (1.0, 0.0, 0.0, 1.0, -x0, -y0)
    rotate %= 360
    if rotate == 90:
        rot: Matrix = (0.0, -1.0, 1.0, 0.0, 0.0, w)
        return mat_mul(shift, rot), h, w
    if rotate == 180:
        rot = (-1.0, 0.0, 0.0, -1.0, w, h)
        return mat_mul(shift, rot), w, h
    if rotate == 270:
        rot = (0.0, 1.0, -1.0, 0.0, h, 0.0)
        return mat_mul(shift, rot), h, w
    return shift, w, h


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Malformed(Exception):
    pass


def _nums(ops: list, n: int) -> list[float]:
    if len(ops) < n:
        raise _Malformed
    vals = ops[-n:]
    for v in vals:
        if not _is_num(v):
            raise _Malformed
    return vals


@dataclass
class _GState:
    ctm: Matrix = IDENTITY
    font: Optional[PdfFont] = None
    font_size: float = 0.0
    char_spacing: float = 0.0
    word_spacing: float = 0.0
    hscale: float = 1.0
    leading: float = 0.0
    rise: float = 0.0

    def copy(self) -> _GState:
        return _GState(
            self.ctm, self.font, self.font_size, self.char_spacing,
            self.word_spacing, self.hscale, self.leading, self.rise,
        )


class _OpenCell:
    __slots__ = ("key", "font_name", "size", "ux", "uy", "glyphs", "ox", "oy", "ex", "ey", "px", "py", "last_ws")

    def __init__(self, key, font_name, size, ux, uy):
        self.key = key
        self.font_name = font_name
        self.size = size
        self.ux = ux
        self.uy = uy
        # (text, is_whitespace, (x0, y0, x1, y1) or None)
        self.glyphs: list = []
        self.last_ws = True


@dataclass
class ExtractResult:
    cells: list[TextCell] = field(default_factory=list)
    bitmap_regions: list[BoundingBox] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class CellExtractor:
    """Interpret one page's content and group glyphs into ``TextCell`` runs.

    A cell is closed when the baseline moves, when the gap along the
    writing direction since the previous glyph exceeds
    ``split_gap * font_size``, when the font or size changes, or when the
    writing direction changes.
    """

    def __init__(
        self,
        graph: ObjectGraph,
        width: float,
        height: float,
        base_matrix: Matrix = IDENTITY,
        split_gap: float = DEFAULT_SPLIT_GAP,
        page_no: int = 1,
        font_cache: Optional[dict] = None,
    ) -> None:
        self.graph = graph
        self.width = width
        self.height = height
        self.split_gap = split_gap
        self.page_no = page_no
        self.fonts = font_cache if font_cache is not None else {}
        self.gs = _GState(ctm=base_matrix)
        self.stack: list[_GState] = []
        self.tm: Matrix = IDENTITY
        self.tlm: Matrix = IDENTITY
        self.cur: Optional[_OpenCell] = None
        self.raw_cells: list[TextCell] = []
        self.result = ExtractResult()
        self._seen_warnings: set[str] = set()
        self._rotated = False
        self._forms: list[int] = []
        self.resources: dict = {}
        self._ops = {
            "q": self._op_q, "Q": self._op_Q, "cm": self._op_cm,
            "BT": self._op_BT, "ET": self._op_ET,
            "Tc": self._op_Tc, "Tw": self._op_Tw, "Tz": self._op_Tz,
            "TL": self._op_TL, "Tf": self._op_Tf, "Ts": self._op_Ts,
            "Td": self._op_Td, "TD": self._op_TD, "Tm": self._op_Tm, "T*": self._op_Tstar,
            "Tj": self._op_Tj, "TJ": self._op_TJ, "'": self._op_quote, '"': self._op_dquote,
            "Do": self._op_Do,
        }

    # -- entry point -------------------------------------------------------

    def run(self, content: bytes, resources: dict) -> ExtractResult:
        self.resources = resources if isinstance(resources, dict) else {}
        self._interpret(content)
        self._flush()
        self._finish()
        return self.result

    def warn(self, msg: str) -> None:
        msg = f"page {self.page_no}: {msg}"
        if msg not in self._seen_warnings:
            self._seen_warnings.add(msg)
            self.result.warnings.append(msg)

    # -- tokenizer loop ----------------------------------------------------

    def _interpret(self, data: bytes) -> None:
        lex = Lexer(data)
        nxt = lex.next
        ops: list = []
        handlers = self._ops
        while True:
            try:
                kind, value = nxt()
                if kind is None:
                    break
                if kind == "kw":
                    if value == "BI":
                        self._inline_image(lex)
                    else:
                        handler = handlers.get(value)
                        if handler is not None:
                            try:
                                handler(ops)
                            except _Malformed:
                                self.warn(f"malformed operands for '{value}' skipped")
                    ops = []
                elif kind == "aopen" or kind == "dopen":
                    ops.append(lex._finish(kind, value))
                else:
                    ops.append(value)
            except PdfSyntaxError as exc:
                self.warn(f"content stream syntax error ({exc}); rest of stream ignored")
                break

    # -- graphics state ----------------------------------------------------

    def _op_q(self, ops):
        self.stack.append(self.gs.copy())

    def _op_Q(self, ops):
        if self.stack:
            self.gs = self.stack.pop()

    def _op_cm(self, ops):
        m = tuple(float(v) for v in _nums(ops, 6))
        self.gs.ctm = mat_mul(m, self.gs.ctm)

    # -- text state --------------------------------------------------------

    def _op_BT(self, ops):
        self.tm = self.tlm = IDENTITY

    def _op_ET(self, ops):
        pass

    def _op_Tc(self, ops):
        self.gs.char_spacing = float(_nums(ops, 1)[0])

    def _op_Tw(self, ops):
        self.gs.word_spacing = float(_nums(ops, 1)[0])

    def _op_Tz(self, ops):
        self.gs.hscale = float(_nums(ops, 1)[0]) / 100.0

    def _op_TL(self, ops):
        self.gs.leading = float(_nums(ops, 1)[0])

    def _op_Ts(self, ops):
        self.gs.rise = float(_nums(ops, 1)[0])

    def _op_Tf(self, ops):
        if len(ops) < 2 or not isinstance(ops[-2], str) or not _is_num(ops[-1]):
            raise _Malformed
        name, size = ops[-2], float(ops[-1])
        self.gs.font = self._font(name)
        self.gs.font_size = size

    def _font(self, name: str) -> PdfFont:
        r = self.graph.resolve
        fonts = r(self.resources.get("Font"))
        ref = fonts.get(name) if isinstance(fonts, dict) else None
        fontdict = r(ref)
        if not isinstance(fontdict, dict):
            self.warn(f"font resource /{name} missing; using fallback metrics")
            key = ("missing", name)
            fontdict = {}
        else:
            key = ref if ref is not fontdict else ("direct", id(fontdict))
        font = self.fonts.get(key)
        if font is None:
            font = PdfFont(fontdict, self.graph, name)
            font = self.fonts.setdefault(key, font)
        return font

    def _op_Td(self, ops):
        tx, ty = _nums(ops, 2)
        self._move(float(tx), float(ty))

    def _op_TD(self, ops):
        tx, ty = _nums(ops, 2)
        self.gs.leading = -float(ty)
        self._move(float(tx), float(ty))

    def _move(self, tx: float, ty: float) -> None:
        a, b, c, d, e, f = self.tlm
        self.tlm = (a, b, c, d, tx * a + ty * c + e, tx * b + ty * d + f)
        self.tm = self.tlm

    def _op_Tm(self, ops):
        self.tlm = self.tm = tuple(float(v) for v in _nums(ops, 6))

    def _op_Tstar(self, ops):
        self._move(0.0, -self.gs.leading)

    # -- text showing ------------------------------------------------------

    def _op_Tj(self, ops):
        if not ops or not isinstance(ops[-1], bytes):
            raise _Malformed
        self._show(ops[-1])

    def _op_quote(self, ops):
        if not ops or not isinstance(ops[-1], bytes):
            raise _Malformed
        self._move(0.0, -self.gs.leading)
        self._show(ops[-1])

    def _op_dquote(self, ops):
        if len(ops) < 3 or not isinstance(ops[-1], bytes) or not (_is_num(ops[-3]) and _is_num(ops[-2])):
            raise _Malformed
        self.gs.word_spacing = float(ops[-3])
        self.gs.char_spacing = float(ops[-2])
        self._move(0.0, -self.gs.leading)
        self._show(ops[-1])

    def _op_TJ(self, ops):
        if not ops or not isinstance(ops[-1], list):
            raise _Malformed
        gs = self.gs
        for elem in ops[-1]:
            if isinstance(elem, bytes):
                self._show(elem)
            elif _is_num(elem):
                tx = -(elem / 1000.0) * gs.font_size * gs.hscale
                a, b, c, d, e, f = self.tm
                self.tm = (a, b, c, d, tx * a + e, tx * b + f)

    def _show(self, data: bytes) -> None:
        gs = self.gs
        font = gs.font
        if font is None:
            self.warn("text shown before a font was selected; skipped")
            return
        if font.type3:
            self.warn(f"Type3 font {font.name} is not supported; its text is skipped")
            return
        fs, th = gs.font_size, gs.hscale
        tc, tw, rise = gs.char_spacing, gs.word_spacing, gs.rise
        tm = self.tm
        a, b, c, d, e, f = mat_mul(tm, gs.ctm)
        hs = math.hypot(a, b)
        size = abs(fs) * math.hypot(c, d)
        glyphs = font.glyphs(data)
        s = 0.0
        if hs > 0 and size > 0:
            ux, uy = a / hs, b / hs
            if not self._rotated and (abs(uy) > 1e-6 or ux < 0):
                self._rotated = True
                self.warn("rotated text found; emitted with axis-aligned boxes")
            y0 = rise + font.descent * fs
            y1 = rise + font.ascent * fs
            cy_lo, cy_hi = sorted((y0 * c, y1 * c))
            dy_lo, dy_hi = sorted((y0 * d, y1 * d))
            rc, rd = rise * c, rise * d
            key = (font.name, round(size, 3), round(ux, 4), round(uy, 4))
            emit = self._glyph
            for text, w, is_space in glyphs:
                gw = w * fs * th
                adv = (w * fs + tc + (tw if is_space else 0.0)) * th
                xa, xb = s * a, (s + gw) * a
                ya, yb = s * b, (s + gw) * b
                box = (
                    min(xa, xb) + cy_lo + e,
                    min(ya, yb) + dy_lo + f,
                    max(xa, xb) + cy_hi + e,
                    max(ya, yb) + dy_hi + f,
                )
                emit(
                    text, box, key, font.name, size, ux, uy,
                    xa + rc + e, ya + rd + f,
                    xb + rc + e, yb + rd + f,
                    (s + adv) * a + rc + e, (s + adv) * b + rd + f,
                )
                s += adv
        else:
            for _, w, is_space in glyphs:
                s += (w * fs + tc + (tw if is_space else 0.0)) * th
        ta, tb, tcc, td, te, tf = tm
        self.tm = (ta, tb, tcc, td, s * ta + te, s * tb + tf)

    def _glyph(self, text, box, key, font_name, size, ux, uy, ox, oy, ex, ey, px, py) -> None:
        ws = not text.strip()
        cur = self.cur
        if cur is not None:
            if cur.key != key:
                self._flush()
                cur = None
            else:
                perp = (oy - cur.oy) * ux - (ox - cur.ox) * uy
                along = (ox - cur.ex) * ux + (oy - cur.ey) * uy
                if abs(perp) > BASELINE_TOLERANCE * size or abs(along) > self.split_gap * size:
                    self._flush()
                    cur = None
                elif not ws and not cur.last_ws:
                    slack = (ox - cur.px) * ux + (oy - cur.py) * uy
                    if slack > SPACE_GAP * size:
                        cur.glyphs.append((" ", True, None))
        if cur is None:
            cur = self.cur = _OpenCell(key, font_name, size, ux, uy)
        cur.glyphs.append((text, ws, box))
        cur.last_ws = ws
        cur.ox, cur.oy, cur.ex, cur.ey, cur.px, cur.py = ox, oy, ex, ey, px, py

    def _flush(self) -> None:
        cur = self.cur
        self.cur = None
        if cur is None:
            return
        glyphs = cur.glyphs
        lo, hi = 0, len(glyphs)
        while lo < hi and glyphs[lo][1]:
            lo += 1
        while hi > lo and glyphs[hi - 1][1]:
            hi -= 1
        if lo == hi:
            return
        kept = glyphs[lo:hi]
        x0 = y0 = math.inf
        x1 = y1 = -math.inf
        for _, _, box in kept:
            if box is None:
                continue
            if box[0] < x0:
                x0 = box[0]
            if box[1] < y0:
                y0 = box[1]
            if box[2] > x1:
                x1 = box[2]
            if box[3] > y1:
                y1 = box[3]
        text = "".join(g[0] for g in kept)
        # device space is bottom-left; store as TopLeft
        self.raw_cells.append((text, x0, self.height - y1, x1, self.height - y0, cur.size, cur.font_name))

    # -- XObjects ----------------------------------------------------------

    def _op_Do(self, ops):
        if not ops or not isinstance(ops[-1], str):
            raise _Malformed
        name = ops[-1]
        r = self.graph.resolve
        xobjs = r(self.resources.get("XObject"))
        ref = xobjs.get(name) if isinstance(xobjs, dict) else None
        xobj = r(ref)
        if not isinstance(xobj, Stream):
            self.warn(f"XObject /{name} missing")
            return
        subtype = r(xobj.get("Subtype"))
        if subtype == "Image":
            self._image_region()
        elif subtype == "Form":
            self._form(xobj)

    def _image_region(self) -> None:
        a, b, c, d, e, f = self.gs.ctm
        xs = (e, a + e, c + e, a + c + e)
        ys = (f, b + f, d + f, b + d + f)
        l, r = max(min(xs), 0.0), min(max(xs), self.width)
        lo, hi = max(min(ys), 0.0), min(max(ys), self.height)
        if l >= r or lo >= hi:
            return
        self.result.bitmap_regions.append(BoundingBox(l, self.height - hi, r, self.height - lo))

    def _form(self, xobj: Stream) -> None:
        objnum = xobj.objnum if xobj.objnum is not None else id(xobj)
        if len(self._forms) >= MAX_FORM_DEPTH or objnum in self._forms:
            self.warn("form XObject nesting too deep or cyclic; skipped")
            return
        try:
            data = self.graph.stream_data(xobj)
        except (UnsupportedFilter, CorruptStream) as exc:
            self.warn(f"form XObject unreadable ({exc}); skipped")
            return
        r = self.graph.resolve
        matrix = r(xobj.get("Matrix"))
        saved_gs, saved_res = self.gs, self.resources
        saved_tm, saved_tlm, saved_stack = self.tm, self.tlm, self.stack
        self.gs = saved_gs.copy()
        self.stack = []
        if isinstance(matrix, list) and len(matrix) == 6 and all(_is_num(v) for v in matrix):
            self.gs.ctm = mat_mul(tuple(float(v) for v in matrix), self.gs.ctm)
        res = r(xobj.get("Resources"))
        if isinstance(res, dict):
            self.resources = res
        self._forms.append(objnum)
        try:
            self._interpret(data)
        finally:
            self._forms.pop()
            self.gs, self.resources = saved_gs, saved_res
            self.tm, self.tlm, self.stack = saved_tm, saved_tlm, saved_stack

    def _inline_image(self, lex: Lexer) -> None:
        data = lex.data
        idx = data.find(b"ID", lex.pos)
        if idx < 0:
            lex.pos = len(data)
            return
        m = _EI_RE.search(data, idx + 3)
        if m is None:
            self.warn("inline image without EI; rest of stream ignored")
            lex.pos = len(data)
            return
        lex.pos = m.end()
        self._image_region()

    # -- finishing ---------------------------------------------------------

    def _finish(self) -> None:
        w, h = self.width, self.height
        out = self.result.cells
        dropped = 0
        for text, l, t, r, b, size, font_name in self.raw_cells:
            if r < 0 or l > w or b < 0 or t > h:
                dropped += 1
                continue
            box = BoundingBox(max(l, 0.0), max(t, 0.0), min(r, w), min(b, h))
            out.append(TextCell(text, box, round(size, 4), font_name, len(out)))
        if dropped:
            self.warn(f"{dropped} text cell(s) outside the page box dropped")


def extract_cells(
    content: bytes,
    resources: dict,
    graph: Optional[ObjectGraph] = None,
    width: float = 612.0,
    height: float = 792.0,
    base_matrix: Matrix = IDENTITY,
    split_gap: float = DEFAULT_SPLIT_GAP,
    page_no: int = 1,
) -> ExtractResult:
    """Run the interpreter over a decoded content stream."""
    extractor = CellExtractor(
        graph if graph is not None else ObjectGraph(), width, height, base_matrix, split_gap, page_no
    )
    return extractor.run(content, resources)
