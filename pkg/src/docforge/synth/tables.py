"""Grid-table fixtures built directly as text cells.

``grid_table`` lays out a table whose structure is recoverable from
geometry by construction: every column keeps at least one unspanned
entry, every row keeps at least one entry, column gaps are wider than
any glyph, and a spanning entry reaches into each column it covers but
stops short of the next one.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from docforge.model import BoundingBox
from docforge.pdf.types import TextCell
from docforge.synth.typeset import WORDS

CHAR_W = 5.0
SIZE = 10.0
PITCH = 16.0
GAP = 14.0


@dataclass
class GridTable:
    nrows: int
    ncols: int
    cells: list[TextCell] = field(default_factory=list)
    # (row, col) -> (col_span, text) for every non-empty entry
    entries: dict[tuple[int, int], tuple[int, str]] = field(default_factory=dict)

    def span_map(self) -> dict[tuple[int, int], int]:
        return {k: v[0] for k, v in self.entries.items() if v[0] > 1}

    @property
    def bbox(self) -> BoundingBox:
        return BoundingBox.enclosing([c.bbox for c in self.cells])


def _text(rng: random.Random, numeric: bool, max_chars: int) -> str:
    if numeric:
        return f"{rng.uniform(0, 999):.{rng.randint(0, 2)}f}"[:max_chars]
    out = rng.choice(WORDS)
    while len(out) < max_chars - 6 and rng.random() < 0.3:
        out += " " + rng.choice(WORDS)
    return out[:max_chars].strip() or "x"


def grid_table(rng: random.Random, nrows: int, ncols: int, n_spans: int = 0,
               empty_frac: float = 0.0, x0: float = 72.0, y0: float = 100.0,
               font_name: str = "Helvetica", placeholder: bool = False) -> GridTable:
    """Random table; ``placeholder`` swaps every glyph for 'x' of equal width."""
    widths = [rng.randint(4, 12) for _ in range(ncols)]  # in characters
    xs = [x0]
    for w in widths[:-1]:
        xs.append(xs[-1] + w * CHAR_W + GAP)

    # spans: (row, col, k); each needs a witness row of plain entries under it
    spans: list[tuple[int, int, int]] = []
    reserved: set[tuple[int, int]] = set()
    if ncols >= 2 and nrows >= 2:
        for _ in range(n_spans * 4):
            if len(spans) >= n_spans:
                break
            r = rng.randrange(nrows)
            k = rng.randint(2, min(3, ncols))
            c = rng.randint(0, ncols - k)
            cols = range(c, c + k)
            if any((r, j) in reserved for j in cols):
                continue
            if any(sr == r and not (c + k <= sc or sc + sk <= c) for sr, sc, sk in spans):
                continue
            witnesses = [
                w for w in range(nrows)
                if w != r and not any(sr == w and not (c + k <= sc or sc + sk <= c) for sr, sc, sk in spans)
            ]
            if not witnesses:
                continue
            w = rng.choice(witnesses)
            reserved.update((w, j) for j in cols)
            spans.append((r, c, k))
    covered = {(r, c + d) for r, c, k in spans for d in range(k)}

    entries: dict[tuple[int, int], tuple[int, str]] = {}
    numeric_cols = {j for j in range(ncols) if j > 0 and rng.random() < 0.6}
    for r in range(nrows):
        for c in range(ncols):
            if (r, c) in covered:
                continue
            entries[(r, c)] = (1, _text(rng, r > 0 and c in numeric_cols, widths[c]))
    for r, c, k in spans:
        # reaches past the start of its last column, ends before the next one
        reach = xs[c + k - 1] - xs[c] + CHAR_W * rng.randint(1, widths[c + k - 1])
        entries[(r, c)] = (k, _text(rng, False, int(reach // CHAR_W)) .ljust(int(reach // CHAR_W), "x"))

    # blank out some single entries while keeping every row and column alive
    singles = [k for k, v in entries.items() if v[0] == 1]
    rng.shuffle(singles)
    quota = int(empty_frac * nrows * ncols)
    for key in singles:
        if quota <= 0:
            break
        r, c = key
        row_left = sum(1 for (rr, _) in entries if rr == r)
        col_left = sum(1 for (rr, cc), v in entries.items() if cc == c and v[0] == 1)
        if row_left > 1 and col_left > 1 and not _feeds_span(entries, key, spans):
            del entries[key]
            quota -= 1

    table = GridTable(nrows, ncols, entries=entries)
    idx = 0
    for (r, c), (k, text) in sorted(entries.items()):
        shown = "x" * len(text) if placeholder else text
        l = xs[c]
        top = y0 + r * PITCH
        cell = TextCell(shown, BoundingBox(l, top, l + CHAR_W * len(text), top + SIZE), SIZE, font_name, idx)
        table.cells.append(cell)
        idx += 1
    table.entries = {key: (k, "x" * len(t) if placeholder else t) for key, (k, t) in entries.items()}
    return table


def _feeds_span(entries, key, spans) -> bool:
    """True if removing ``key`` could leave a span without two entries beneath or above it."""
    r0, c0 = key
    for r, c, k in spans:
        if not c <= c0 < c + k:
            continue
        rows_ok = 0
        for rr in {rr for (rr, _) in entries if rr != r}:
            n = sum(1 for d in range(k) if (rr, c + d) in entries and (rr, c + d) != key
                    and entries[(rr, c + d)][0] == 1)
            if n >= 2:
                rows_ok += 1
        if rows_ok == 0:
            return True
    return False
