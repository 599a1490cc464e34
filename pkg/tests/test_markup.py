import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docforge.errors import UndecodableInput
from docforge.export import export_html, export_markdown
from docforge.markup.html import html_source, parse_html, recovery_events
from docforge.markup.markdown import flatten_inline, markdown_source, parse_markdown
from docforge.markup.source import InputFormat, detect_format
from docforge.model import CellRole, GroupItem, ItemLabel, TableItem, TextItem


def md(text, warnings=None):
    return parse_markdown(markdown_source(text, "t.md"), warnings)


def html(text, warnings=None):
    return parse_html(html_source(text, "t.html"), warnings)


def outline(doc):
    """(depth, label, extra) per item: heading level, group name or table shape."""
    out = []
    for _, item, depth in doc.iterate_items():
        extra = None
        if isinstance(item, GroupItem):
            extra = item.name
        elif isinstance(item, TableItem):
            extra = (item.data.num_rows, item.data.num_cols)
        elif item.label is ItemLabel.SECTION_HEADER:
            extra = item.level
        out.append((depth, item.label, extra))
    return out


def texts(doc):
    return [(item.label, item.text) for _, item, _ in doc.iterate_items() if isinstance(item, TextItem)]


# -- format detection ----------------------------------------------------------


@pytest.mark.parametrize("data,name,expected", [
    (b"%PDF-1.7\n...", "x.md", InputFormat.PDF),
    (b"<!DOCTYPE html><html></html>", None, InputFormat.HTML),
    (b"\xef\xbb\xbf  <HTML lang=en>", None, InputFormat.HTML),
    (b"<?xml version='1.0'?><!-- c --><html>", None, InputFormat.HTML),
    (b"plain text", "notes.md", InputFormat.MARKDOWN),
    (b"plain text", "NOTES.MARKDOWN", InputFormat.MARKDOWN),
    (b"<p>fragment</p>", "page.htm", InputFormat.HTML),
    (b"<p>fragment</p>", None, InputFormat.UNKNOWN),
    (b"plain text", "x.xyz", InputFormat.UNKNOWN),
    (b"plain text", None, InputFormat.UNKNOWN),
    (b" " * 1030 + b"%PDF-1.4", "a.pdf", InputFormat.PDF),
    (b" " * 1030 + b"%PDF-1.4", "a.md", InputFormat.MARKDOWN),
])
def test_detect_format(data, name, expected):
    assert detect_format(data, name) is expected


def test_invalid_utf8_is_refused():
    with pytest.raises(UndecodableInput):
        md(b"abc \xff\xfe def")
    with pytest.raises(UndecodableInput):
        html(b"<p>\xc3</p>")


def test_bom_is_tolerated():
    assert texts(md(b"\xef\xbb\xbfhello")) == [(ItemLabel.TEXT, "hello")]


# -- HTML ------------------------------------------------------------------------


def test_html_heading_opens_group():
    doc = html("<h1>T</h1><p>a</p>")
    assert outline(doc) == [(0, ItemLabel.GROUP, "section"), (1, ItemLabel.SECTION_HEADER, 1), (1, ItemLabel.TEXT, None)]


def test_html_one_by_two_table():
    doc = html("<table><tr><td>1</td><td>2</td></tr></table>")
    data = doc.tables[0].data
    assert (data.num_rows, data.num_cols) == (1, 2)
    assert [c.text for c in data.cells] == ["1", "2"]


def test_html_list():
    doc = html("<ul><li>x</li><li>y</li></ul>")
    assert outline(doc) == [(0, ItemLabel.LIST, "list"), (1, ItemLabel.LIST_ITEM, None), (1, ItemLabel.LIST_ITEM, None)]
    assert html("<ol><li>x</ol>").groups[0].name == "ordered-list"


def test_html_spans_are_honoured():
    doc = html("""<table>
      <tr><th colspan="2">head</th><th rowspan="2">side</th></tr>
      <tr><td>a</td><td>b</td></tr>
      <tr><td>c</td><td colspan="2">d</td></tr>
    </table>""")
    data = doc.tables[0].data
    assert (data.num_rows, data.num_cols) == (3, 3)
    spans = {(c.start_row, c.start_col): (c.row_span, c.col_span) for c in data.cells}
    assert spans == {(0, 0): (1, 2), (0, 2): (2, 1), (1, 0): (1, 1), (1, 1): (1, 1), (2, 0): (1, 1), (2, 1): (1, 2)}
    assert data.grid()[0][0].role is CellRole.COLUMN_HEADER
    data.validate()


def test_html_ragged_rows_are_padded():
    data = html("<table><tr><td>a</td><td>b</td><td>c</td></tr><tr><td>d</td></tr></table>").tables[0].data
    assert (data.num_rows, data.num_cols, len(data.cells)) == (2, 3, 6)


def test_html_figure_caption_links():
    doc = html("<figure><img src=a.png><figcaption>Fig 1</figcaption></figure>"
               "<table><caption>Tab 1</caption><tr><td>x</td></tr></table>")
    pic, tab = doc.pictures[0], doc.tables[0]
    assert doc.resolve(pic.caption).text == "Fig 1"
    assert doc.resolve(tab.caption).text == "Tab 1"


def test_html_code_and_skipped_parts():
    doc = html("<html><head><title>t</title><style>p{}</style></head><body>"
               "<script>x()</script><pre><code>a  b\n  c</code></pre><p>after</p></body></html>")
    assert texts(doc) == [(ItemLabel.CODE, "a  b\n  c"), (ItemLabel.TEXT, "after")]


def test_html_inline_markup_is_flattened():
    assert texts(html("<p>some <b>bold</b> and <a href='x'>a link</a>&amp;more</p>")) == [
        (ItemLabel.TEXT, "some bold and a link&more")]


def test_html_has_no_geometry():
    doc = html("<h2>x</h2><p>y</p><ul><li>z</li></ul>")
    assert all(p.bbox is None for t in doc.texts for p in t.prov)


def test_html_unclosed_paragraph_recovery():
    warnings = []
    doc = html("<p>one<p>two<div>three</div><ul><li>a<li>b</ul>", warnings)
    assert texts(doc) == [(ItemLabel.TEXT, "one"), (ItemLabel.TEXT, "two"), (ItemLabel.TEXT, "three"),
                          (ItemLabel.LIST_ITEM, "a"), (ItemLabel.LIST_ITEM, "b")]
    assert warnings and all(w.startswith("html: ") for w in warnings)
    assert recovery_events("<p>fine</p><ul><li>a</li></ul>") == []


def test_html_heading_levels_nest():
    doc = html("<h1>A</h1><h3>B</h3><p>x</p><h2>C</h2><h1>D</h1>")
    headers = [(d, i.text) for _, i, d in doc.iterate_items() if i.label is ItemLabel.SECTION_HEADER]
    assert headers == [(1, "A"), (2, "B"), (2, "C"), (1, "D")]


# -- Markdown --------------------------------------------------------------------


def test_md_heading_and_text():
    assert outline(md("# A\n\ntext")) == [(0, ItemLabel.GROUP, "section"), (1, ItemLabel.SECTION_HEADER, 1),
                                          (1, ItemLabel.TEXT, None)]


def test_md_pipe_table():
    data = md("|a|b|\n|-|-|\n|1|2|").tables[0].data
    assert (data.num_rows, data.num_cols) == (2, 2)
    grid = data.grid()
    assert [c.text for c in grid[0]] == ["a", "b"] and [c.text for c in grid[1]] == ["1", "2"]
    assert [c.role for c in grid[0]] == [CellRole.COLUMN_HEADER] * 2
    assert [c.role for c in grid[1]] == [CellRole.BODY] * 2


def test_md_fenced_code():
    assert texts(md("```\ncode\n```")) == [(ItemLabel.CODE, "code")]
    assert texts(md("~~~~python\n  a\n\n  b\n~~~~\n")) == [(ItemLabel.CODE, "  a\n\n  b")]


def test_md_unclosed_fence_runs_to_end():
    assert texts(md("```\nx\ny")) == [(ItemLabel.CODE, "x\ny")]


def test_md_nested_lists():
    doc = md("- a\n  - b\n  - c\n- d\n\n1. one\n2. two\n")
    assert outline(doc) == [
        (0, ItemLabel.LIST, "list"), (1, ItemLabel.LIST_ITEM, None), (1, ItemLabel.LIST, "list"),
        (2, ItemLabel.LIST_ITEM, None), (2, ItemLabel.LIST_ITEM, None), (1, ItemLabel.LIST_ITEM, None),
        (0, ItemLabel.LIST, "ordered-list"), (1, ItemLabel.LIST_ITEM, None), (1, ItemLabel.LIST_ITEM, None),
    ]


def test_md_image_and_quote():
    doc = md("![alt](a.png)\n\n> quoted *text*\n")
    assert outline(doc) == [(0, ItemLabel.PICTURE, None), (0, ItemLabel.GROUP, "blockquote"), (1, ItemLabel.TEXT, None)]
    assert texts(doc) == [(ItemLabel.TEXT, "quoted text")]


def test_md_italic_line_after_image_is_caption():
    doc = md("![x](y.png)\n\n*Figure 1: things*\n")
    assert doc.resolve(doc.pictures[0].caption).text == "Figure 1: things"


@pytest.mark.parametrize("raw,flat", [
    ("**bold** and _em_", "bold and em"),
    ("[link](http://x) `code`", "link code"),
    ("a\\*b", "a*b"),
    ("snake_case_name", "snake_case_name"),
    ("~~gone~~ kept", "gone kept"),
    ("&amp; &lt;", "& <"),
])
def test_inline_flattening(raw, flat):
    assert flatten_inline(raw) == flat


def test_md_setext_and_html_blocks_warn():
    warnings = []
    doc = md("Title\n=====\n\n<div>\nraw\n</div>\n", warnings)
    assert [label for label, _ in texts(doc)] == [ItemLabel.TEXT, ItemLabel.TEXT]
    assert "markdown: setext heading kept as a paragraph" in warnings
    assert "markdown: HTML block kept as a paragraph" in warnings


def test_md_has_no_geometry():
    doc = md("# h\n\npara\n\n- item\n")
    assert all(p.bbox is None for t in doc.texts for p in t.prov)


def test_md_never_fails_on_noise():
    rng = random.Random(5)
    alphabet = "#-*>|`~ \n\t1.)[]()!_abc"
    for _ in range(300):
        md("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 200)))).validate()


# -- properties --------------------------------------------------------------------

word = st.sampled_from(["alpha", "beta", "gamma", "delta", "naïve", "x<y", "a&b", "2024"])
phrase = st.lists(word, min_size=1, max_size=5).map(" ".join)


@st.composite
def md_documents(draw):
    blocks = []
    for _ in range(draw(st.integers(0, 12))):
        kind = draw(st.sampled_from(["h", "p", "ul", "ol", "code", "table", "img"]))
        if kind == "h":
            blocks.append("#" * draw(st.integers(1, 6)) + " " + draw(phrase))
        elif kind == "p":
            blocks.append(draw(phrase))
        elif kind in ("ul", "ol"):
            lines = []
            for i in range(draw(st.integers(1, 4))):
                depth = draw(st.integers(0, 1)) if lines else 0
                marker = "-" if kind == "ul" else f"{i + 1}."
                lines.append("  " * depth * (1 if kind == "ul" else 2) + f"{marker} {draw(phrase)}")
            blocks.append("\n".join(lines))
        elif kind == "code":
            blocks.append("```\n" + draw(phrase) + "\n```")
        elif kind == "table":
            ncols = draw(st.integers(1, 4))
            rows = [[draw(word) for _ in range(ncols)] for _ in range(draw(st.integers(1, 4)))]
            lines = ["| " + " | ".join(rows[0]) + " |", "|" + "---|" * ncols]
            lines += ["| " + " | ".join(r) + " |" for r in rows[1:]]
            blocks.append("\n".join(lines))
        else:
            blocks.append("![pic](p.png)")
    return "\n\n".join(blocks) + "\n"


@given(md_documents())
def test_markdown_round_trip_keeps_structure(source):
    first = md(source)
    second = md(export_markdown(first))
    assert outline(second) == outline(first)
    assert texts(second) == texts(first)


@given(md_documents())
def test_html_export_reimports_with_same_shape(source):
    first = md(source)
    rendered = export_html(first)
    assert recovery_events(rendered) == []
    assert outline(html(rendered)) == outline(first)


def heading_nesting_ok(doc):
    def walk(ref, levels):
        item = doc.resolve(ref)
        if isinstance(item, GroupItem):
            own = None
            if item.name == "section" and item.children:
                head = doc.resolve(item.children[0])
                if head.label is ItemLabel.SECTION_HEADER:
                    own = head.level
                    if any(lv >= own for lv in levels):
                        return False
            inner = levels + ([own] if own is not None else [])
            return all(walk(c, inner) for c in item.children)
        return True

    return all(walk(r, []) for r in doc.body)


@given(st.lists(st.tuples(st.integers(1, 6), st.booleans()), max_size=20))
def test_heading_nesting_markdown(spec):
    source = "\n\n".join(("#" * lv + f" h{i}") + ("\n\nbody" if body else "") for i, (lv, body) in enumerate(spec))
    assert heading_nesting_ok(md(source))


@given(st.lists(st.tuples(st.integers(1, 6), st.booleans()), max_size=20))
def test_heading_nesting_html(spec):
    source = "".join(f"<h{lv}>h{i}</h{lv}>" + ("<p>body</p>" if body else "") for i, (lv, body) in enumerate(spec))
    assert heading_nesting_ok(html(source))
