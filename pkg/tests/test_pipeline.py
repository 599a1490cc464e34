import json
import random

import pytest

from docgen import HELLO, raw_pdf, truncated_flate_pdf
from docforge.layout import LayoutCluster
from docforge.markup.source import InputFormat
from docforge.model import FURNITURE_LABELS, BoundingBox, GroupItem, ItemLabel, TableItem, TextItem
from docforge.pdf.parser import PdfDocument
from docforge.pdf.types import ParsedPage, TextCell
from docforge.pipeline import (
    BasePipeline,
    ConversionOptions,
    ConversionResult,
    ConversionStatus,
    DocumentInput,
    PageResult,
    StandardPdfPipeline,
    assemble,
    cluster_text,
    convert,
    convert_all,
    register_pipeline,
    resolve_thread_budget,
)
from docforge.pipeline.assembly import section_levels
from docforge.pipeline.base import FORMAT_PIPELINES, PIPELINES
from docforge.synth.typeset import LayoutBuilder, random_layout_document


def doc_input(name, data):
    return DocumentInput(name, data)


def builder_pdf(fill):
    b = LayoutBuilder()
    b.new_page()
    fill(b)
    return b, b.to_bytes()


# -- routing and status ----------------------------------------------------------


def test_markdown_routes_to_simple_pipeline():
    res = convert(doc_input("a.md", b"# A\n\ntext\n"))
    assert res.status is ConversionStatus.SUCCESS
    assert [t.text for t in res.document.texts] == ["A", "text"]
    assert [p.page_no for p in res.timing.pages] == [1]
    assert res.timing.pages[0].applied == {"backend_parse"}


def test_html_routes_to_simple_pipeline():
    res = convert(doc_input("a.html", b"<p>x</p>"))
    assert res.status is ConversionStatus.SUCCESS and res.document.texts[0].text == "x"


def test_unknown_binary_fails():
    res = convert(doc_input("blob.bin", bytes(range(256))))
    assert res.status is ConversionStatus.FAILURE
    assert res.errors == ["unsupported format: blob.bin"] and res.document is None


def test_missing_file_fails(tmp_path):
    res = convert(tmp_path / "nope.pdf")
    assert res.status is ConversionStatus.FAILURE and "cannot read" in res.errors[0]


def test_force_format_overrides_detection():
    res = convert(doc_input("stdin", b"# head\n"), ConversionOptions(force_format=InputFormat.MARKDOWN))
    assert res.status is ConversionStatus.SUCCESS
    assert res.document.texts[0].label is ItemLabel.SECTION_HEADER


def test_invalid_utf8_markdown_fails():
    res = convert(doc_input("bad.md", b"\xff\xfe\xfa"))
    assert res.status is ConversionStatus.FAILURE and "UTF-8" in res.errors[0]


def test_not_a_pdf_fails():
    res = convert(doc_input("x.pdf", b"%PDF-1.4\ngarbage"), ConversionOptions(force_format=InputFormat.PDF))
    assert res.status is ConversionStatus.FAILURE and res.errors


def test_truncated_page_gives_partial_success():
    res = convert(doc_input("t.pdf", truncated_flate_pdf()))
    assert res.status is ConversionStatus.PARTIAL_SUCCESS
    assert [t.text for t in res.document.texts] == ["Hello"]
    assert any(w.startswith("page 2:") for w in res.warnings)
    assert [p.page_no for p in res.timing.pages] == [1, 2]


def test_every_page_failing_is_failure():
    import zlib

    from docforge.pdf.objects import Name

    cut = zlib.compress(HELLO * 10)[:20]
    res = convert(doc_input("t.pdf", raw_pdf([({"Filter": Name("FlateDecode")}, cut)])))
    assert res.status is ConversionStatus.FAILURE and res.errors == ["all 1 page(s) failed"]


def test_result_invariants():
    with pytest.raises(ValueError):
        ConversionResult(DocumentInput("a", b""), ConversionStatus.FAILURE)
    with pytest.raises(ValueError):
        ConversionResult(DocumentInput("a", b""), ConversionStatus.SUCCESS)


# -- PDF stages ------------------------------------------------------------------


def test_two_pages_in_order():
    b = LayoutBuilder()
    for text in ("first page text", "second page text"):
        b.new_page()
        b.paragraph(text)
    res = convert(doc_input("two.pdf", b.to_bytes()))
    assert [p.page_no for p in res.timing.pages] == [1, 2]
    assert [t.text for t in res.document.texts] == ["first page text", "second page text"]
    assert [t.prov[0].page_no for t in res.document.texts] == [1, 2]


def three_tables(b):
    rng = random.Random(1)
    for i in range(3):
        b.paragraph(f"Paragraph number {i} before a table.")
        b.table([["Name", "Qty", "Cost"]] + [[f"item{i}{r}", str(r), f"{r}.50"] for r in range(3)])


def test_page_with_three_tables():
    _, data = builder_pdf(three_tables)
    res = convert(doc_input("t.pdf", data))
    assert len(res.document.tables) == 3
    for table in res.document.tables:
        assert (table.data.num_rows, table.data.num_cols) == (4, 3)
        assert table.data.grid()[0][0].text == "Name"


def test_table_structure_off_keeps_empty_tables():
    _, data = builder_pdf(three_tables)
    res = convert(doc_input("t.pdf", data), ConversionOptions(do_table_structure=False))
    assert len(res.document.tables) == 3
    assert all(t.data.num_rows == 0 and t.data.cells == [] for t in res.document.tables)
    page = res.timing.pages[0]
    assert page.stages["table_structure"] == 0 and "table_structure" not in page.applied


def test_stage_timings_recorded():
    _, data = builder_pdf(three_tables)
    page = convert(doc_input("t.pdf", data)).timing.pages[0]
    assert page.applied == {"backend_parse", "layout", "table_structure", "assembly"}
    assert all(page.stages[s] > 0 for s in page.applied)


def test_title_text_table_caption_assembly():
    def fill(b):
        b.title("A Title For The Page")
        b.paragraph("Some body text that introduces the table below.")
        b.table([["Name", "Score"], ["ann", "1.5"], ["bob", "2.0"]])
        b.caption("Table 1: scores by person.")

    _, data = builder_pdf(fill)
    doc = convert(doc_input("t.pdf", data)).document
    roots = [doc.resolve(r) for r in doc.body]
    assert [r.label for r in roots] == [ItemLabel.TITLE, ItemLabel.TEXT, ItemLabel.TABLE]
    assert doc.resolve(roots[2].caption).text == "Table 1: scores by person."


def test_list_items_fold_into_one_group():
    def fill(b):
        b.paragraph("Items follow.")
        b.list_items(["first thing", "second thing", "third thing", "fourth thing"])

    _, data = builder_pdf(fill)
    doc = convert(doc_input("t.pdf", data)).document
    groups = [g for g in doc.groups if g.label is ItemLabel.LIST]
    assert len(groups) == 1 and len(groups[0].children) == 4
    assert groups[0].name == "list"


def test_header_goes_to_furniture():
    def fill(b):
        b.header("Running head")
        b.paragraph("Body text.")
        b.footer("Page 1")

    _, data = builder_pdf(fill)
    doc = convert(doc_input("t.pdf", data)).document
    body = [i.text for _, i, _ in doc.iterate_items() if isinstance(i, TextItem)]
    furniture = [doc.resolve(r).text for r in doc.furniture]
    assert body == ["Body text."] and furniture == ["Running head", "Page 1"]


def test_pdf_provenance_has_boxes():
    b, data = builder_pdf(three_tables)
    doc = convert(doc_input("t.pdf", data)).document
    for _, item, _ in doc.iterate_items():
        if not isinstance(item, GroupItem):
            assert item.prov and item.prov[0].bbox is not None and item.prov[0].page_no == 1


def test_section_levels_from_font_size_rank():
    def page(cells, labels):
        p = ParsedPage(1, 612, 792, cells)
        clusters = [LayoutCluster(i, lab, c.bbox, 0.9, [c.stream_index]) for i, (c, lab) in enumerate(zip(cells, labels))]
        return PageResult(1, p, clusters)

    sizes = [20, 16, 16, 12, 10]
    cells = [TextCell(f"h{i}", BoundingBox(72, 100 + 30 * i, 200, 100 + 30 * i + s), s, "F", i)
             for i, s in enumerate(sizes)]
    res = page(cells, [ItemLabel.SECTION_HEADER] * 5)
    assert section_levels([res]) == {20: 1, 16: 2, 12: 3, 10: 3}
    doc = assemble([res])
    levels = [i.level for _, i, _ in doc.iterate_items() if isinstance(i, TextItem)]
    assert levels == [1, 2, 2, 3, 3]


def test_code_keeps_line_breaks():
    def fill(b):
        b.code(["def f():", "    return 1"])

    cells = PdfDocument(builder_pdf(fill)[1]).parse_page(1)[0].cells
    cl = LayoutCluster(0, ItemLabel.CODE, BoundingBox.enclosing([c.bbox for c in cells]), 0.9,
                       [c.stream_index for c in cells])
    assert cluster_text(cl, {c.stream_index: c for c in cells}) == "def f():\nreturn 1"


# -- conservation and independence -----------------------------------------------


def body_texts(doc):
    return [i for _, i, _ in doc.iterate_items() if not isinstance(i, GroupItem)]


@pytest.mark.parametrize("seed", range(12))
def test_assembly_conservation(seed):
    data = random_layout_document(seed, pages=2)[0]
    pdf = PdfDocument(data)
    results = StandardPdfPipeline(ConversionOptions(thread_budget=1)).run_pages(pdf)
    doc = assemble(results, timed=False)
    clusters = [(r, c) for r in results for c in r.clusters if c.label not in FURNITURE_LABELS]
    items = body_texts(doc)
    assert len(items) == len(clusters)
    cluster_chars = 0
    for res, cl in clusters:
        if cl.label not in (ItemLabel.TABLE, ItemLabel.PICTURE):  # table text lives in its cells
            cells = {c.stream_index: c for c in res.page.cells}
            cluster_chars += len(cluster_text(cl, cells))
    item_chars = sum(len(i.text) for i in items if isinstance(i, TextItem))
    assert item_chars == cluster_chars


@pytest.mark.parametrize("seed", range(6))
def test_page_execution_order_does_not_matter(seed):
    data = random_layout_document(seed, pages=3)[0]
    options = ConversionOptions(thread_budget=1)
    serial = StandardPdfPipeline(options, page_threads=1).run_pages(PdfDocument(data))
    threaded = StandardPdfPipeline(options, page_threads=4).run_pages(PdfDocument(data))
    shuffled = serial[:]
    random.Random(seed).shuffle(shuffled)
    reference = assemble(serial, timed=False).to_json()
    assert assemble(threaded, timed=False).to_json() == reference
    assert assemble(shuffled, timed=False).to_json() == reference


def test_convert_all_keeps_input_order():
    inputs = [doc_input(f"d{i}.md", f"# doc {i}\n".encode()) for i in range(6)]
    results = convert_all(inputs, ConversionOptions(thread_budget=3))
    assert [r.input.name for r in results] == [f"d{i}.md" for i in range(6)]
    assert [r.document.texts[0].text for r in results] == [f"doc {i}" for i in range(6)]


# -- sidecar -----------------------------------------------------------------------


def sidecar_payload(clusters, page_no=1, size=(612, 792)):
    return {"pages": [{"page_no": page_no, "width": size[0], "height": size[1], "clusters": clusters}]}


def test_sidecar_labels_are_used(tmp_path):
    data = raw_pdf([HELLO])
    side = tmp_path / "s.json"
    side.write_text(json.dumps(sidecar_payload(
        [{"label": "title", "l": 60, "t": 50, "r": 200, "b": 80, "confidence": 0.9}])))
    res = convert(doc_input("h.pdf", data), ConversionOptions(sidecar_path=side))
    assert [(t.label, t.text) for t in res.document.texts] == [(ItemLabel.TITLE, "Hello")]
    heuristic = convert(doc_input("h.pdf", data))
    assert heuristic.document.texts[0].label is not ItemLabel.TITLE


def test_sidecar_directory_lookup_by_stem(tmp_path):
    (tmp_path / "h.json").write_text(json.dumps(sidecar_payload(
        [{"label": "code", "l": 60, "t": 50, "r": 200, "b": 80, "confidence": 0.9}])))
    res = convert(doc_input("h.pdf", raw_pdf([HELLO])), ConversionOptions(sidecar_path=tmp_path))
    assert res.document.texts[0].label is ItemLabel.CODE


def test_missing_sidecar_fails(tmp_path):
    res = convert(doc_input("h.pdf", raw_pdf([HELLO])), ConversionOptions(sidecar_path=tmp_path / "none.json"))
    assert res.status is ConversionStatus.FAILURE and "SidecarMissing" in res.errors[0]


def test_sidecar_page_size_mismatch_fails_that_page(tmp_path):
    side = tmp_path / "s.json"
    side.write_text(json.dumps(sidecar_payload([], size=(500, 500))))
    res = convert(doc_input("h.pdf", raw_pdf([HELLO, HELLO])), ConversionOptions(sidecar_path=side))
    assert res.status is ConversionStatus.PARTIAL_SUCCESS
    assert any("page 1: layout failed" in w for w in res.warnings)


def test_sidecar_option_validation():
    with pytest.raises(ValueError):
        ConversionOptions(layout_source="sidecar")
    with pytest.raises(ValueError):
        ConversionOptions(thread_budget=0)


# -- thread budget -------------------------------------------------------------------


@pytest.mark.parametrize("explicit,env,expected", [
    (None, {}, 1),
    (None, {"DOCFORGE_NUM_THREADS": "8"}, 8),
    (None, {"OMP_NUM_THREADS": "4"}, 4),
    (None, {"DOCFORGE_NUM_THREADS": "2", "OMP_NUM_THREADS": "6"}, 2),
    (None, {"DOCFORGE_NUM_THREADS": "zero", "OMP_NUM_THREADS": "3"}, 3),
    (None, {"DOCFORGE_NUM_THREADS": "0"}, 1),
    (5, {"DOCFORGE_NUM_THREADS": "2"}, 5),
])
def test_thread_budget_resolution(explicit, env, expected):
    assert resolve_thread_budget(explicit, env) == expected


def test_thread_budget_env_default(monkeypatch):
    monkeypatch.setenv("DOCFORGE_NUM_THREADS", "3")
    assert ConversionOptions().thread_budget == 3
    with pytest.raises(ValueError):
        resolve_thread_budget(0)


# -- custom pipelines ----------------------------------------------------------------


def test_register_custom_pipeline(monkeypatch):
    class Upper(BasePipeline):
        def execute(self, source):
            from docforge.model import new_document
            doc = new_document(source.name)
            doc.add_text(ItemLabel.TEXT, source.data.decode().upper())
            return ConversionResult(source, ConversionStatus.SUCCESS, doc)

    monkeypatch.setitem(PIPELINES, "upper", Upper)
    monkeypatch.setitem(FORMAT_PIPELINES, InputFormat.MARKDOWN, "simple")
    register_pipeline("upper", Upper, (InputFormat.MARKDOWN,))
    assert convert(doc_input("a.md", b"shout")).document.texts[0].text == "SHOUT"
    with pytest.raises(TypeError):
        register_pipeline("bad", dict)
