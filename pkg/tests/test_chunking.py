import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docgen import random_document
from docforge.chunking import (
    BaseChunker,
    HierarchicalChunker,
    IdentityChunker,
    body_text_refs,
    chunk_hierarchical,
    coverage,
    in_traversal_order,
    to_jsonl,
)
from docforge.model import (
    FURNITURE,
    BoundingBox,
    ItemLabel,
    Provenance,
    TableCellSpec,
    TableStructure,
    TextItem,
    new_document,
)
from docforge.pipeline import DocumentInput, convert
from docforge.synth.typeset import random_layout_document


def law_holds(chunks, doc):
    missing, duplicated = coverage(chunks, doc)
    return not missing and not duplicated


# -- examples ----------------------------------------------------------------------


def test_heading_path_on_both_chunks():
    doc = new_document("d")
    sec = doc.add_group(ItemLabel.GROUP, "section")
    head = doc.add_text(ItemLabel.SECTION_HEADER, "S", sec, level=1)
    a = doc.add_text(ItemLabel.TEXT, "a", sec)
    b = doc.add_text(ItemLabel.TEXT, "b", sec)
    chunks = chunk_hierarchical(doc)
    assert [c.text for c in chunks] == ["a", "b"]
    assert [c.meta.headings for c in chunks] == [["S"], ["S"]]
    assert chunks[0].meta.item_refs == [head, a] and chunks[1].meta.item_refs == [b]


def test_nested_heading_path():
    doc = new_document("d")
    outer = doc.add_group(ItemLabel.GROUP, "section")
    doc.add_text(ItemLabel.SECTION_HEADER, "One", outer, level=1)
    inner = doc.add_group(ItemLabel.GROUP, "section", outer)
    doc.add_text(ItemLabel.SECTION_HEADER, "One.A", inner, level=2)
    doc.add_text(ItemLabel.TEXT, "deep", inner)
    doc.add_text(ItemLabel.TEXT, "back out", outer)
    assert [c.meta.headings for c in chunk_hierarchical(doc)] == [["One", "One.A"], ["One"]]


def test_list_items_merge():
    doc = new_document("d")
    lst = doc.add_group(ItemLabel.LIST, "list")
    doc.add_text(ItemLabel.LIST_ITEM, "x", lst)
    doc.add_text(ItemLabel.LIST_ITEM, "• y", lst)
    chunks = chunk_hierarchical(doc)
    assert [c.text for c in chunks] == ["x\ny"]


def test_separate_lists_do_not_merge():
    doc = new_document("d")
    for name in ("list", "ordered-list"):
        lst = doc.add_group(ItemLabel.LIST, name)
        doc.add_text(ItemLabel.LIST_ITEM, name, lst)
    assert [c.text for c in chunk_hierarchical(doc)] == ["list", "ordered-list"]


def test_table_with_caption_on_page_three():
    doc = new_document("d")
    box = BoundingBox(72, 100, 300, 200)
    data = TableStructure(2, 1, [TableCellSpec(0, 0, text="h"), TableCellSpec(1, 0, text="1")])
    table = doc.add_table(data, prov=[Provenance(3, box)])
    doc.add_text(ItemLabel.CAPTION, "Tab 1", table, [Provenance(3, BoundingBox(72, 205, 300, 215), (0, 5))])
    chunks = chunk_hierarchical(doc)
    assert len(chunks) == 1
    assert chunks[0].text == "Tab 1\n\n| h |\n| --- |\n| 1 |"
    assert chunks[0].meta.pages == [3] and len(chunks[0].meta.bboxes) == 2


def test_picture_caption_alone_and_bare_picture_skipped():
    doc = new_document("d")
    pic = doc.add_picture()
    cap = doc.add_text(ItemLabel.CAPTION, "Figure 2", pic)
    doc.add_picture()
    chunks = chunk_hierarchical(doc)
    assert [(c.text, c.meta.item_refs) for c in chunks] == [("Figure 2", [cap])]


def test_furniture_excluded():
    doc = new_document("d")
    doc.add_text(ItemLabel.PAGE_HEADER, "head", FURNITURE)
    doc.add_text(ItemLabel.TEXT, "body")
    assert [c.text for c in chunk_hierarchical(doc)] == ["body"]


def test_trailing_header_gets_its_own_chunk():
    doc = new_document("d")
    sec = doc.add_group(ItemLabel.GROUP, "section")
    head = doc.add_text(ItemLabel.SECTION_HEADER, "Lonely", sec, level=2)
    chunks = chunk_hierarchical(doc)
    assert [(c.text, c.meta.item_refs) for c in chunks] == [("Lonely", [head])]


def test_empty_document_gives_no_chunks():
    doc = new_document("d")
    assert chunk_hierarchical(doc) == [] and list(IdentityChunker().chunk(doc)) == []


def test_soft_split_option():
    doc = new_document("d")
    text = "First sentence here. Second sentence here. Third one."
    ref = doc.add_text(ItemLabel.TEXT, text)
    chunks = chunk_hierarchical(doc, max_chars=25)
    assert [c.text for c in chunks] == ["First sentence here.", "Second sentence here.", "Third one."]
    assert [c.meta.part for c in chunks] == [0, 1, 2]
    assert all(c.meta.item_refs == [ref] for c in chunks)
    assert law_holds(chunks, doc)
    assert [c.text for c in chunk_hierarchical(doc)] == [text]
    with pytest.raises(ValueError):
        HierarchicalChunker(0)


def test_jsonl_lines():
    doc = random_document(3)
    chunks = chunk_hierarchical(doc)
    lines = to_jsonl(chunks).splitlines()
    assert len(lines) == len(chunks)
    first = json.loads(lines[0]) if lines else None
    if first:
        assert set(first) == {"text", "meta"}
        assert set(first["meta"]) == {"doc_name", "headings", "item_refs", "pages", "bboxes", "part"}


# -- coverage law ------------------------------------------------------------------


class FootnoteDropper(BaseChunker):
    """Deliberately broken: loses footnotes."""

    def chunk(self, doc):
        for chunk in IdentityChunker().chunk(doc):
            if doc.resolve(chunk.meta.item_refs[0]).label is not ItemLabel.FOOTNOTE:
                yield chunk


class Doubler(BaseChunker):
    def chunk(self, doc):
        for chunk in IdentityChunker().chunk(doc):
            yield chunk
            yield chunk


def test_contract_catches_dropped_footnotes():
    doc = new_document("d")
    doc.add_text(ItemLabel.TEXT, "body")
    note = doc.add_text(ItemLabel.FOOTNOTE, "1 see here")
    missing, duplicated = coverage(FootnoteDropper().chunk(doc), doc)
    assert missing == [note] and duplicated == []
    assert law_holds(IdentityChunker().chunk(doc), doc)


def test_contract_catches_duplicates():
    doc = new_document("d")
    ref = doc.add_text(ItemLabel.TEXT, "body")
    assert coverage(Doubler().chunk(doc), doc) == ([], [ref])


def test_coverage_law_thousand_documents():
    for seed in range(1000):
        doc = random_document(seed)
        chunks = chunk_hierarchical(doc)
        assert law_holds(chunks, doc), seed
        assert in_traversal_order(chunks, doc), seed


@given(st.integers(0, 2**32), st.sampled_from([None, 10, 40]))
def test_coverage_and_order_property(seed, max_chars):
    doc = random_document(seed)
    for chunks in (chunk_hierarchical(doc, max_chars), list(IdentityChunker().chunk(doc))):
        assert law_holds(chunks, doc)
        assert in_traversal_order(chunks, doc)


@given(st.integers(0, 2**32))
def test_identity_chunker_is_one_per_item(seed):
    doc = random_document(seed)
    chunks = list(IdentityChunker().chunk(doc))
    assert [c.meta.item_refs[0] for c in chunks] == body_text_refs(doc)


def test_order_check_detects_reordering():
    doc = new_document("d")
    doc.add_text(ItemLabel.TEXT, "a")
    doc.add_text(ItemLabel.TEXT, "b")
    chunks = list(IdentityChunker().chunk(doc))
    assert in_traversal_order(chunks, doc)
    assert not in_traversal_order(chunks[::-1], doc)


@given(st.integers(0, 2**32))
def test_grounding_matches_provenance(seed):
    doc = random_document(seed)
    for chunk in chunk_hierarchical(doc):
        provs = [p for r in chunk.meta.item_refs for p in getattr(doc.resolve(r), "prov", [])]
        assert chunk.meta.pages == sorted({p.page_no for p in provs})
        assert set(chunk.meta.bboxes) == {p.bbox for p in provs if p.bbox is not None}


@pytest.mark.parametrize("seed", range(8))
def test_pdf_chunks_are_grounded(seed):
    data, _ = random_layout_document(seed, pages=2)
    doc = convert(DocumentInput(f"d{seed}.pdf", data)).document
    chunks = chunk_hierarchical(doc)
    assert chunks
    for chunk in chunks:
        assert chunk.meta.pages and chunk.meta.bboxes
    assert law_holds(chunks, doc)


def test_headers_do_not_lose_text():
    rng = random.Random(2)
    for seed in range(50):
        doc = random_document(rng.randrange(1 << 30))
        chunked = " ".join(c.text for c in chunk_hierarchical(doc))
        for _, item, _ in doc.iterate_items():
            if isinstance(item, TextItem) and item.label is ItemLabel.SECTION_HEADER and item.text:
                headings = [h for c in chunk_hierarchical(doc) for h in c.meta.headings]
                assert item.text in headings or item.text in chunked
