import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docgen import random_document
from docforge.errors import (
    DanglingRef,
    LabelPlacementViolation,
    MalformedPayload,
    SchemaVersionMismatch,
    UnresolvableParent,
)
from docforge.model import (
    FURNITURE,
    SCHEMA_VERSION,
    BoundingBox,
    CellRole,
    CoordOrigin,
    DoclingDocument,
    DocumentOrigin,
    ItemLabel,
    NodeRef,
    Provenance,
    StoreKind,
    TableCellSpec,
    TableItem,
    TableStructure,
    TextItem,
    fnv1a_64,
    new_document,
)


def test_new_document_is_empty():
    origin = DocumentOrigin.from_bytes(b"%PDF-1.7", "a.pdf", "application/pdf")
    doc = new_document("a.pdf", origin)
    assert doc.body_item_count() == 0
    assert not doc.texts and not doc.tables and not doc.pictures and not doc.groups
    assert new_document("a.pdf", origin) == doc
    new_document("", origin).validate()


def test_fnv1a_known_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_first_insertion():
    doc = new_document("d")
    ref = doc.add_text(ItemLabel.TEXT, "hello")
    assert ref == NodeRef(StoreKind.TEXTS, 0)
    assert doc.body == [ref]
    assert doc.resolve(ref).text == "hello"


def test_list_item_under_group():
    doc = new_document("d")
    group = doc.add_group(ItemLabel.LIST, "list")
    doc.add_text(ItemLabel.LIST_ITEM, "x", group)
    assert len(doc.resolve(group).children) == 1
    assert doc.body == [group]


@pytest.mark.parametrize("label", [ItemLabel.PAGE_HEADER, ItemLabel.PAGE_FOOTER])
def test_furniture_label_in_body_rejected(label):
    doc = new_document("d")
    with pytest.raises(LabelPlacementViolation):
        doc.add_text(label, "x")
    group = doc.add_group()
    with pytest.raises(LabelPlacementViolation):
        doc.add_text(label, "x", group)
    doc.add_text(label, "x", FURNITURE)
    assert len(doc.furniture) == 1


def test_body_label_in_furniture_rejected():
    doc = new_document("d")
    with pytest.raises(LabelPlacementViolation):
        doc.add_text(ItemLabel.TEXT, "x", FURNITURE)


def test_bad_parents():
    doc = new_document("d")
    text = doc.add_text(ItemLabel.TEXT, "t")
    with pytest.raises(UnresolvableParent):
        doc.add_text(ItemLabel.TEXT, "x", text)
    with pytest.raises(UnresolvableParent):
        doc.add_text(ItemLabel.TEXT, "x", NodeRef(StoreKind.GROUPS, 3))
    with pytest.raises(UnresolvableParent):
        doc.add_text(ItemLabel.TEXT, "x", "body")
    table = doc.add_table(TableStructure())
    with pytest.raises(UnresolvableParent):
        doc.add_text(ItemLabel.TEXT, "not a caption", table)
    doc.add_text(ItemLabel.CAPTION, "Table 1", table)
    with pytest.raises(LabelPlacementViolation):
        doc.add_text(ItemLabel.CAPTION, "Table 1 again", table)


def test_item_invariants():
    with pytest.raises(ValueError):
        TextItem(ItemLabel.SECTION_HEADER, "h", level=7)
    with pytest.raises(ValueError):
        TextItem(ItemLabel.TEXT, "t", level=1)
    with pytest.raises(ValueError):
        TextItem(ItemLabel.TABLE, "t")
    with pytest.raises(ValueError):
        Provenance(0)
    with pytest.raises(ValueError):
        Provenance(1, None, (3, 2))
    doc = new_document("d")
    with pytest.raises(ValueError):
        doc.add_text(ItemLabel.TEXT, "abc", prov=[Provenance(1, None, (0, 4))])
    assert TextItem(ItemLabel.SECTION_HEADER, "h").level == 1


def test_pre_order_iteration():
    doc = new_document("d")
    a = doc.add_text(ItemLabel.TEXT, "A")
    g = doc.add_group()
    b = doc.add_text(ItemLabel.TEXT, "B", g)
    c = doc.add_text(ItemLabel.TEXT, "C", g)
    assert [r for r, _, _ in doc.iterate_items()] == [a, g, b, c]
    assert list(new_document("e").iterate_items()) == []


def test_depths_three_levels():
    # hand-enumerated pre-order of: A, G1(B, G2(C, D)), E; furniture H
    doc = new_document("d")
    doc.add_text(ItemLabel.TEXT, "A")
    g1 = doc.add_group(name="g1")
    doc.add_text(ItemLabel.TEXT, "B", g1)
    g2 = doc.add_group(name="g2", parent=g1)
    doc.add_text(ItemLabel.TEXT, "C", g2)
    doc.add_text(ItemLabel.TEXT, "D", g2)
    doc.add_text(ItemLabel.TEXT, "E")
    doc.add_text(ItemLabel.PAGE_HEADER, "H", FURNITURE)

    def name(item):
        return item.text if isinstance(item, TextItem) else item.name

    got = [(name(i), d) for _, i, d in doc.iterate_items()]
    assert got == [("A", 0), ("g1", 0), ("B", 1), ("g2", 1), ("C", 2), ("D", 2), ("E", 0)]
    assert [name(i) for _, i, _ in doc.iterate_items(include_furniture=True)][-1] == "H"


def test_caption_is_visited_under_its_target():
    doc = new_document("d")
    pic = doc.add_picture()
    cap = doc.add_text(ItemLabel.CAPTION, "Figure 1", pic)
    assert [(r, d) for r, _, d in doc.iterate_items()] == [(pic, 0), (cap, 1)]


def test_table_with_caption_round_trip():
    doc = new_document("t")
    data = TableStructure(2, 2, [
        TableCellSpec(0, 0, 1, 2, CellRole.COLUMN_HEADER, "head"),
        TableCellSpec(1, 0, 1, 1, CellRole.BODY, "1"),
        TableCellSpec(1, 1, 1, 1, CellRole.BODY, "2"),
    ])
    table = doc.add_table(data, prov=[Provenance(3, BoundingBox(1, 2, 3, 4))])
    cap = doc.add_text(ItemLabel.CAPTION, "Tab 1", table, prov=[Provenance(3, None, (0, 5))])
    back = DoclingDocument.from_json(doc.to_json())
    assert back == doc
    assert back.resolve(back.body[0]).caption == cap
    assert back.resolve(cap).text == "Tab 1"


def test_empty_document_round_trip():
    doc = new_document("")
    assert DoclingDocument.from_json(doc.to_json()) == doc


def test_serialization_is_deterministic_and_keyed():
    doc = random_document(7)
    assert doc.to_json() == random_document(7).to_json()
    payload = json.loads(doc.to_json())
    assert list(payload) == ["schema_version", "name", "origin", "body", "furniture",
                             "texts", "tables", "pictures", "groups"]
    assert payload["schema_version"] == SCHEMA_VERSION


def test_payload_errors():
    doc = new_document("d")
    doc.add_text(ItemLabel.TEXT, "x")
    payload = json.loads(doc.to_json())

    dangling = dict(payload, body=[{"store": "texts", "index": 5}])
    with pytest.raises(DanglingRef):
        DoclingDocument.from_json(json.dumps(dangling))

    with pytest.raises(SchemaVersionMismatch):
        DoclingDocument.from_json(json.dumps(dict(payload, schema_version="2.0")))
    # minor bumps are accepted
    DoclingDocument.from_json(json.dumps(dict(payload, schema_version="1.3")))

    twice = dict(payload, body=payload["body"] * 2)
    with pytest.raises(MalformedPayload):
        DoclingDocument.from_json(json.dumps(twice))
    orphan = dict(payload, body=[])
    with pytest.raises(MalformedPayload):
        DoclingDocument.from_json(json.dumps(orphan))
    for bad in (b"{", b"[]", json.dumps(dict(payload, texts="no")).encode(),
                json.dumps(dict(payload, body=[{"store": "nope", "index": 0}])).encode()):
        with pytest.raises(MalformedPayload):
            DoclingDocument.from_json(bad)


def test_caption_ref_must_be_caption():
    doc = new_document("d")
    pic = doc.add_picture()
    doc.add_text(ItemLabel.CAPTION, "c", pic)
    payload = json.loads(doc.to_json())
    payload["texts"][0]["label"] = "text"
    with pytest.raises(MalformedPayload):
        DoclingDocument.from_json(json.dumps(payload))


def test_table_structure_validation():
    TableStructure(1, 2, [TableCellSpec(0, 0, 1, 2)]).validate()
    with pytest.raises(ValueError):
        TableStructure(1, 2, [TableCellSpec(0, 0, 1, 2), TableCellSpec(0, 1)]).validate()
    with pytest.raises(ValueError):
        TableStructure(1, 1, [TableCellSpec(0, 0, 1, 2)]).validate()


@given(st.integers(0, 2**32))
def test_round_trip_property(seed):
    doc = random_document(seed)
    back = DoclingDocument.from_json(doc.to_json())
    assert back == doc
    assert back.to_json() == doc.to_json()


@given(st.integers(0, 2**32))
def test_single_parent_property(seed):
    doc = random_document(seed)
    refs = list(doc.body) + list(doc.furniture)
    for group in doc.groups:
        refs += group.children
    for item in doc.tables + doc.pictures:
        if item.caption is not None:
            refs.append(item.caption)
    total = len(doc.texts) + len(doc.tables) + len(doc.pictures) + len(doc.groups)
    assert len(refs) == len(set(refs)) == total
    doc.validate()


@given(st.integers(0, 2**32))
def test_traversal_completeness(seed):
    doc = random_document(seed)
    furniture_count = len(doc.furniture)
    total = len(doc.texts) + len(doc.tables) + len(doc.pictures) + len(doc.groups)
    visited = [r for r, _, _ in doc.iterate_items()]
    assert len(visited) == len(set(visited)) == total - furniture_count
    assert all(doc.resolve(r).label not in (ItemLabel.PAGE_HEADER, ItemLabel.PAGE_FOOTER) for r in visited)


coord = st.floats(-2000, 2000, allow_nan=False, allow_infinity=False)


@given(coord, coord, coord, coord, st.floats(1, 3000), st.sampled_from(list(CoordOrigin)))
def test_origin_involution(l, t, r, b, height, origin):
    box = BoundingBox(l, t, r, b, origin)
    assert box.width >= 0 and box.height >= 0
    if origin is CoordOrigin.TOPLEFT:
        assert box.to_bottom_left(height).to_top_left(height) == box
    else:
        assert box.to_top_left(height).to_bottom_left(height) == box


def test_origin_involution_bulk():
    rng = random.Random(3)
    for _ in range(10_000):
        h = rng.uniform(1, 2000)
        box = BoundingBox(*(rng.uniform(-100, 1000) for _ in range(4)))
        assert box.to_bottom_left(h).to_top_left(h) == box


def test_bbox_geometry():
    a = BoundingBox(0, 0, 10, 10)
    b = BoundingBox(5, 5, 15, 15)
    assert a.intersection_area(b) == 25
    assert a.iou(b) == pytest.approx(25 / 175)
    assert a.union(b) == BoundingBox(0, 0, 15, 15)
    assert BoundingBox(10, 10, 0, 0) == a
    assert BoundingBox.from_dict(a.to_dict()) == a


def test_table_item_label():
    assert TableItem().label is ItemLabel.TABLE
