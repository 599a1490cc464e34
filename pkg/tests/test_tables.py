import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docforge.layout import LayoutCluster
from docforge.model import BoundingBox, CellRole, ItemLabel, TableCellSpec, TableStructure
from docforge.pdf.types import TextCell
from docforge.synth.tables import grid_table
from docforge.tables import classify_headers, infer_structure, is_numeric, match_cells, recognize_table


def cluster_for(cells, box=None):
    box = box or BoundingBox.enclosing([c.bbox for c in cells])
    return LayoutCluster(0, ItemLabel.TABLE, box, 0.5, [c.stream_index for c in cells])


def recognize(gt, warnings=None):
    return recognize_table(cluster_for(gt.cells), gt.cells, warnings)


def span_map(structure):
    return {(c.start_row, c.start_col): c.col_span for c in structure.cells if c.col_span > 1}


def paint(structure):
    """Grid of owner counts; every position must be painted exactly once."""
    grid = [[0] * structure.num_cols for _ in range(structure.num_rows)]
    for c in structure.cells:
        for r in range(c.start_row, c.start_row + c.row_span):
            for k in range(c.start_col, c.start_col + c.col_span):
                grid[r][k] += 1
    return grid


def text_conserved(structure, page_cells):
    by_index = {c.stream_index: c for c in page_cells}
    placed = []
    for spec in structure.cells:
        texts = [by_index[i].text for i in spec.source_cells]
        if " ".join(texts) != spec.text:
            return False
        placed += texts
    return Counter(placed) == Counter(c.text for c in page_cells)


def grid_case(seed):
    rng = random.Random(seed)
    return grid_table(rng, rng.randint(1, 8), rng.randint(1, 8), rng.randint(0, 2), 0.1)


def check_grid(seed):
    gt = grid_case(seed)
    got = recognize(gt)
    assert (got.num_rows, got.num_cols) == (gt.nrows, gt.ncols)
    assert span_map(got) == gt.span_map()
    assert all(v == 1 for row in paint(got) for v in row)
    assert text_conserved(got, gt.cells)
    got.validate()


# -- examples ------------------------------------------------------------------


def aligned_grid(nrows, ncols, text=lambda r, c: f"r{r}c{c}"):
    cells, idx = [], 0
    for r in range(nrows):
        for c in range(ncols):
            l, t = 72 + c * 80, 100 + r * 16
            s = text(r, c)
            cells.append(TextCell(s, BoundingBox(l, t, l + 6 * len(s), t + 10), 10, "Helvetica", idx))
            idx += 1
    return cells


def test_three_by_three():
    cells = aligned_grid(3, 3)
    got = recognize_table(cluster_for(cells), cells)
    assert (got.num_rows, got.num_cols, len(got.cells)) == (3, 3, 9)
    assert span_map(got) == {}
    assert got.grid()[1][2].text == "r1c2"


def test_first_row_spanning_all_columns():
    cells = aligned_grid(3, 3)[3:]
    cells.append(TextCell("A heading as wide as the table " + "x" * 10, BoundingBox(72, 84, 72 + 80 * 2 + 30, 94),
                          10, "Helvetica", 99))
    got = recognize_table(cluster_for(cells), cells)
    assert (got.num_rows, got.num_cols) == (3, 3)
    assert span_map(got) == {(0, 0): 3}
    assert got.grid()[0][0].role is CellRole.COLUMN_HEADER


def test_empty_cluster_is_zero_by_zero():
    warnings = []
    got = recognize_table(LayoutCluster(0, ItemLabel.TABLE, BoundingBox(0, 0, 10, 10)), [], warnings)
    assert (got.num_rows, got.num_cols, got.cells) == (0, 0, [])


def test_empty_positions_are_body_cells():
    cells = [c for c in aligned_grid(3, 3) if c.text != "r1c1"]
    got = recognize_table(cluster_for(cells), cells)
    hole = got.grid()[1][1]
    assert hole.text == "" and hole.role is CellRole.BODY and hole.source_cells == []


def test_two_sources_in_one_band_join_in_stream_order():
    a = TextCell("A", BoundingBox(72, 100, 80, 110), 10, "Helvetica", 0)
    b = TextCell("B", BoundingBox(84, 100, 92, 110), 10, "Helvetica", 1)
    structure = TableStructure(1, 1, [TableCellSpec(0, 0, bbox=BoundingBox(72, 100, 92, 110))])
    got = match_cells(structure, [b, a])
    assert got.cells[0].text == "A B" and got.cells[0].source_cells == [0, 1]


def test_boundary_centre_goes_to_lower_band():
    structure = TableStructure(1, 2, [
        TableCellSpec(0, 0, bbox=BoundingBox(0, 0, 50, 10)),
        TableCellSpec(0, 1, bbox=BoundingBox(60, 0, 100, 10)),
    ])
    on_edge = TextCell("E", BoundingBox(40, 0, 60, 10), 10, "Helvetica", 0)  # centre x = 50
    got = match_cells(structure, [on_edge])
    assert got.cells[0].text == "E" and got.cells[1].text == ""


def test_cell_outside_grid_goes_to_nearest_with_warning():
    structure = TableStructure(1, 2, [
        TableCellSpec(0, 0, bbox=BoundingBox(0, 0, 50, 10)),
        TableCellSpec(0, 1, bbox=BoundingBox(60, 0, 100, 10)),
    ])
    far = TextCell("F", BoundingBox(200, 0, 210, 10), 10, "Helvetica", 0)
    warnings = []
    got = match_cells(structure, [far], warnings)
    assert got.cells[1].text == "F" and warnings


def header_case(rows):
    cells = [TableCellSpec(r, c, text=t) for r, row in enumerate(rows) for c, t in enumerate(row)]
    return classify_headers(TableStructure(len(rows), len(rows[0]), cells))


def roles(structure):
    grid = structure.grid()
    return [[grid[r][c].role for c in range(structure.num_cols)] for r in range(structure.num_rows)]


def test_text_header_over_numbers():
    got = roles(header_case([["Name", "Score"], ["ann", "1.5"], ["bob", "2"]]))
    assert got[0] == [CellRole.COLUMN_HEADER] * 2
    assert got[1][0] is CellRole.ROW_HEADER and got[1][1] is CellRole.BODY


def test_all_numeric_is_body():
    got = roles(header_case([["1", "2"], ["3", "4"]]))
    assert all(role is CellRole.BODY for row in got for role in row)


def test_span_in_first_row_marks_header():
    structure = classify_headers(TableStructure(2, 3, [
        TableCellSpec(0, 0, 1, 3, text="1 2 3"),
        TableCellSpec(1, 0, text="4"), TableCellSpec(1, 1, text="5"), TableCellSpec(1, 2, text="6"),
    ]))
    assert structure.cells[0].role is CellRole.COLUMN_HEADER


@pytest.mark.parametrize("text,expected", [
    ("12", True), ("1,234.5", True), ("-3%", True), ("$ 5", True), ("€4", True), ("−7", True),
    ("abc", False), ("12a", False), ("", False), (" ", True),  # the class admits bare whitespace
])
def test_is_numeric(text, expected):
    assert is_numeric(text) is expected


# -- generated grids -------------------------------------------------------------


@pytest.mark.parametrize("seed", range(60))
def test_generated_grids(seed):
    check_grid(seed)


@given(st.integers(0, 2**32))
def test_generated_grids_property(seed):
    check_grid(seed)


@given(st.integers(0, 2**32))
def test_placeholder_glyphs_give_same_shape(seed):
    rng_a, rng_b = random.Random(seed), random.Random(seed)
    n, m, k = rng_a.randint(1, 8), rng_a.randint(1, 8), rng_a.randint(0, 2)
    rng_b.randint(1, 8), rng_b.randint(1, 8), rng_b.randint(0, 2)
    real = recognize(grid_table(rng_a, n, m, k, 0.1))
    fake = recognize(grid_table(rng_b, n, m, k, 0.1, placeholder=True))

    def shape(s):
        return (s.num_rows, s.num_cols, sorted((c.start_row, c.start_col, c.row_span, c.col_span) for c in s.cells))

    assert shape(real) == shape(fake)


def test_infer_structure_ignores_cells_outside_cluster_list():
    gt = grid_case(3)
    cluster = cluster_for(gt.cells)
    extra = TextCell("outside", BoundingBox(0, 0, 10, 10), 10, "Helvetica", 999)
    assert recognize_table(cluster, gt.cells + [extra]) == recognize(gt)
    assert infer_structure(cluster, gt.cells).num_rows == gt.nrows
