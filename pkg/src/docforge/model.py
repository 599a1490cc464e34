"""The unified document representation.

A ``DoclingDocument`` keeps every item in one of four flat stores (texts,
tables, pictures, groups) and expresses structure through ``NodeRef``
pointers: ordered roots for the body and the furniture, ordered children for
groups, and a caption pointer on tables and pictures. Every stored item has
exactly one incoming pointer, so the pointers form a forest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

from docforge.errors import (
    DanglingRef,
    LabelPlacementViolation,
    MalformedPayload,
    SchemaVersionMismatch,
    UnresolvableParent,
)

SCHEMA_VERSION = "1.0"
COORD_DECIMALS = 4


def fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _coord(value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite coordinate: {value!r}")
    # "+ 0.0" folds -0.0 into 0.0 so equal boxes serialize identically
    return round(value, COORD_DECIMALS) + 0.0


class CoordOrigin(str, Enum):
    TOPLEFT = "topleft"
    BOTTOMLEFT = "bottomleft"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in page points.

    Coordinates are rounded to ``COORD_DECIMALS`` places on construction so
    that flipping between origins with the same page height is exact.
    For ``TOPLEFT`` boxes ``t <= b``; for ``BOTTOMLEFT`` boxes ``b <= t``.
    """

    l: float
    t: float
    r: float
    b: float
    origin: CoordOrigin = CoordOrigin.TOPLEFT

    def __post_init__(self) -> None:
        l, r = _coord(self.l), _coord(self.r)
        t, b = _coord(self.t), _coord(self.b)
        if l > r:
            l, r = r, l
        origin = CoordOrigin(self.origin)
        if (origin is CoordOrigin.TOPLEFT and t > b) or (
            origin is CoordOrigin.BOTTOMLEFT and b > t
        ):
            t, b = b, t
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "origin", origin)

    @property
    def width(self) -> float:
        return self.r - self.l

    @property
    def height(self) -> float:
        return abs(self.b - self.t)

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.l + self.r) / 2.0, (self.t + self.b) / 2.0

    def to_top_left(self, page_height: float) -> BoundingBox:
        if self.origin is CoordOrigin.TOPLEFT:
            return self
        h = _coord(page_height)
        return BoundingBox(self.l, h - self.t, self.r, h - self.b, CoordOrigin.TOPLEFT)

    def to_bottom_left(self, page_height: float) -> BoundingBox:
        if self.origin is CoordOrigin.BOTTOMLEFT:
            return self
        h = _coord(page_height)
        return BoundingBox(self.l, h - self.t, self.r, h - self.b, CoordOrigin.BOTTOMLEFT)

    def _top_bottom(self) -> tuple[float, float]:
        # (low, high) on the vertical axis regardless of origin
        return (self.t, self.b) if self.origin is CoordOrigin.TOPLEFT else (self.b, self.t)

    def intersection_area(self, other: BoundingBox) -> float:
        lo1, hi1 = self._top_bottom()
        lo2, hi2 = other._top_bottom()
        w = min(self.r, other.r) - max(self.l, other.l)
        h = min(hi1, hi2) - max(lo1, lo2)
        if w <= 0 or h <= 0:
            return 0.0
        return w * h

    def iou(self, other: BoundingBox) -> float:
        inter = self.intersection_area(other)
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def union(self, other: BoundingBox) -> BoundingBox:
        lo1, hi1 = self._top_bottom()
        lo2, hi2 = other._top_bottom()
        if self.origin is CoordOrigin.TOPLEFT:
            return BoundingBox(
                min(self.l, other.l), min(lo1, lo2), max(self.r, other.r), max(hi1, hi2)
            )
        return BoundingBox(
            min(self.l, other.l),
            max(hi1, hi2),
            max(self.r, other.r),
            min(lo1, lo2),
            CoordOrigin.BOTTOMLEFT,
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.l, self.t, self.r, self.b)

    @classmethod
    def enclosing(cls, boxes: list[BoundingBox]) -> BoundingBox:
        it = iter(boxes)
        out = next(it)
        for box in it:
            out = out.union(box)
        return out

    def to_dict(self) -> dict:
        return {"l": self.l, "t": self.t, "r": self.r, "b": self.b, "origin": self.origin.value}

    @classmethod
    def from_dict(cls, data: dict) -> BoundingBox:
        return cls(
            _num(data, "l"), _num(data, "t"), _num(data, "r"), _num(data, "b"),
            CoordOrigin(_str(data, "origin")),
        )


@dataclass(frozen=True)
class Provenance:
    page_no: int
    bbox: Optional[BoundingBox] = None
    charspan: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.page_no < 1:
            raise ValueError(f"page_no must be >= 1, got {self.page_no}")
        if self.charspan is not None:
            start, end = self.charspan
            if not 0 <= start <= end:
                raise ValueError(f"bad charspan {self.charspan}")
            object.__setattr__(self, "charspan", (int(start), int(end)))


class ItemLabel(str, Enum):
    TITLE = "title"
    SECTION_HEADER = "section-header"
    TEXT = "text"
    LIST_ITEM = "list-item"
    CAPTION = "caption"
    FOOTNOTE = "footnote"
    FORMULA = "formula"
    CODE = "code"
    PAGE_HEADER = "page-header"
    PAGE_FOOTER = "page-footer"
    TABLE = "table"
    PICTURE = "picture"
    GROUP = "group"
    LIST = "list"


TEXT_LABELS = frozenset(
    {
        ItemLabel.TITLE,
        ItemLabel.SECTION_HEADER,
        ItemLabel.TEXT,
        ItemLabel.LIST_ITEM,
        ItemLabel.CAPTION,
        ItemLabel.FOOTNOTE,
        ItemLabel.FORMULA,
        ItemLabel.CODE,
        ItemLabel.PAGE_HEADER,
        ItemLabel.PAGE_FOOTER,
    }
)
FURNITURE_LABELS = frozenset({ItemLabel.PAGE_HEADER, ItemLabel.PAGE_FOOTER})
GROUP_LABELS = frozenset({ItemLabel.GROUP, ItemLabel.LIST})


class StoreKind(str, Enum):
    TEXTS = "texts"
    TABLES = "tables"
    PICTURES = "pictures"
    GROUPS = "groups"


@dataclass(frozen=True)
class NodeRef:
    store: StoreKind
    index: int

    def to_dict(self) -> dict:
        return {"store": self.store.value, "index": self.index}

    @classmethod
    def from_dict(cls, data: dict) -> NodeRef:
        try:
            store = StoreKind(_str(data, "store"))
        except ValueError as exc:
            raise MalformedPayload(f"unknown store in ref {data!r}") from exc
        index = data.get("index")
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise MalformedPayload(f"bad ref index in {data!r}")
        return cls(store, index)


class _Furniture:
    def __repr__(self) -> str:
        return "FURNITURE"


#: Pass as ``parent`` to place page headers/footers in the furniture tree.
FURNITURE = _Furniture()


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


class CellRole(str, Enum):
    COLUMN_HEADER = "column-header"
    ROW_HEADER = "row-header"
    BODY = "body"


@dataclass
class TableCellSpec:
    start_row: int
    start_col: int
    row_span: int = 1
    col_span: int = 1
    role: CellRole = CellRole.BODY
    text: str = ""
    bbox: Optional[BoundingBox] = None
    source_cells: list[int] = field(default_factory=list)

    @property
    def end_row(self) -> int:
        return self.start_row + self.row_span

    @property
    def end_col(self) -> int:
        return self.start_col + self.col_span

    def to_dict(self) -> dict:
        return {
            "start_row": self.start_row,
            "start_col": self.start_col,
            "row_span": self.row_span,
            "col_span": self.col_span,
            "role": self.role.value,
            "text": self.text,
            "bbox": self.bbox.to_dict() if self.bbox else None,
            "source_cells": list(self.source_cells),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TableCellSpec:
        bbox = data.get("bbox")
        src = data.get("source_cells", [])
        if not isinstance(src, list) or not all(isinstance(i, int) for i in src):
            raise MalformedPayload("source_cells must be a list of integers")
        try:
            role = CellRole(_str(data, "role"))
        except ValueError as exc:
            raise MalformedPayload(f"unknown cell role {data.get('role')!r}") from exc
        return cls(
            start_row=_int(data, "start_row"),
            start_col=_int(data, "start_col"),
            row_span=_int(data, "row_span"),
            col_span=_int(data, "col_span"),
            role=role,
            text=_str(data, "text"),
            bbox=BoundingBox.from_dict(bbox) if bbox is not None else None,
            source_cells=list(src),
        )


@dataclass
class TableStructure:
    num_rows: int = 0
    num_cols: int = 0
    cells: list[TableCellSpec] = field(default_factory=list)

    def grid(self) -> list[list[Optional[TableCellSpec]]]:
        """Row-major matrix; spanned positions point at the covering cell."""
        out: list[list[Optional[TableCellSpec]]] = [
            [None] * self.num_cols for _ in range(self.num_rows)
        ]
        for cell in self.cells:
            for r in range(cell.start_row, cell.end_row):
                for c in range(cell.start_col, cell.end_col):
                    out[r][c] = cell
        return out

    def validate(self) -> None:
        seen = [[False] * self.num_cols for _ in range(self.num_rows)]
        for cell in self.cells:
            if cell.row_span < 1 or cell.col_span < 1:
                raise ValueError(f"non-positive span in {cell}")
            if cell.start_row < 0 or cell.start_col < 0:
                raise ValueError(f"negative start in {cell}")
            if cell.end_row > self.num_rows or cell.end_col > self.num_cols:
                raise ValueError(f"cell {cell} exceeds {self.num_rows}x{self.num_cols} grid")
            for r in range(cell.start_row, cell.end_row):
                for c in range(cell.start_col, cell.end_col):
                    if seen[r][c]:
                        raise ValueError(f"position ({r},{c}) covered twice")
                    seen[r][c] = True

    def to_dict(self) -> dict:
        return {
            "num_rows": self.num_rows,
            "num_cols": self.num_cols,
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_dict(cls, data: dict) -> TableStructure:
        cells = data.get("cells")
        if not isinstance(cells, list):
            raise MalformedPayload("table cells must be a list")
        out = cls(
            _int(data, "num_rows"),
            _int(data, "num_cols"),
            [TableCellSpec.from_dict(_obj(c, "table cell")) for c in cells],
        )
        try:
            out.validate()
        except ValueError as exc:
            raise MalformedPayload(str(exc)) from exc
        return out


# ---------------------------------------------------------------------------
# items
# ---------------------------------------------------------------------------


@dataclass
class TextItem:
    label: ItemLabel
    text: str
    prov: list[Provenance] = field(default_factory=list)
    level: Optional[int] = None  # only for section headers, 1..6

    def __post_init__(self) -> None:
        self.label = ItemLabel(self.label)
        if self.label not in TEXT_LABELS:
            raise ValueError(f"{self.label.value} is not a text label")
        if self.label is ItemLabel.SECTION_HEADER:
            if self.level is None:
                self.level = 1
            if not 1 <= self.level <= 6:
                raise ValueError(f"section level must be 1..6, got {self.level}")
        elif self.level is not None:
            raise ValueError("level is only valid for section headers")


@dataclass
class TableItem:
    data: TableStructure = field(default_factory=TableStructure)
    caption: Optional[NodeRef] = None
    prov: list[Provenance] = field(default_factory=list)

    @property
    def label(self) -> ItemLabel:
        return ItemLabel.TABLE


@dataclass
class PictureItem:
    caption: Optional[NodeRef] = None
    classification: Optional[str] = None
    prov: list[Provenance] = field(default_factory=list)

    @property
    def label(self) -> ItemLabel:
        return ItemLabel.PICTURE


@dataclass
class GroupItem:
    label: ItemLabel = ItemLabel.GROUP
    name: str = "group"
    children: list[NodeRef] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.label = ItemLabel(self.label)
        if self.label not in GROUP_LABELS:
            raise ValueError(f"{self.label.value} is not a group label")


DocItem = Union[TextItem, TableItem, PictureItem, GroupItem]

_STORE_OF = {
    TextItem: StoreKind.TEXTS,
    TableItem: StoreKind.TABLES,
    PictureItem: StoreKind.PICTURES,
    GroupItem: StoreKind.GROUPS,
}


@dataclass(frozen=True)
class DocumentOrigin:
    mimetype: str
    filename: str
    binary_hash: int

    @classmethod
    def from_bytes(cls, data: bytes, filename: str, mimetype: str) -> DocumentOrigin:
        return cls(mimetype=mimetype, filename=filename, binary_hash=fnv1a_64(data))


@dataclass
class DoclingDocument:
    name: str
    origin: Optional[DocumentOrigin] = None
    body: list[NodeRef] = field(default_factory=list)
    furniture: list[NodeRef] = field(default_factory=list)
    texts: list[TextItem] = field(default_factory=list)
    tables: list[TableItem] = field(default_factory=list)
    pictures: list[PictureItem] = field(default_factory=list)
    groups: list[GroupItem] = field(default_factory=list)

    # -- lookup ------------------------------------------------------------

    def _store(self, kind: StoreKind) -> list:
        return getattr(self, kind.value)

    def resolve(self, ref: NodeRef) -> DocItem:
        store = self._store(ref.store)
        if not 0 <= ref.index < len(store):
            raise UnresolvableParent(f"{ref} does not resolve")
        return store[ref.index]

    # -- construction ------------------------------------------------------

    def add_item(self, item: DocItem, parent: Union[NodeRef, _Furniture, None] = None) -> NodeRef:
        """Append ``item`` to its store and hook it under ``parent``.

        ``parent`` is ``None`` for a body root, ``FURNITURE`` for a furniture
        root, a group ref for a child, or a table/picture ref to attach a
        caption item to that target.
        """
        label = item.label
        if isinstance(item, (TableItem, PictureItem)) and item.caption is not None:
            raise ValueError("attach captions by adding them with the target as parent")
        if isinstance(item, GroupItem) and item.children:
            raise ValueError("groups must be added empty and filled through add_item")
        if isinstance(item, TextItem):
            for prov in item.prov:
                if prov.charspan is not None and prov.charspan[1] > len(item.text):
                    raise ValueError(f"charspan {prov.charspan} exceeds text length")

        if parent is FURNITURE:
            if label not in FURNITURE_LABELS:
                raise LabelPlacementViolation(f"{label.value} cannot be placed in furniture")
            attach = self.furniture.append
        elif parent is None:
            if label in FURNITURE_LABELS:
                raise LabelPlacementViolation(f"{label.value} must be placed in furniture")
            attach = self.body.append
        elif isinstance(parent, NodeRef):
            target = self.resolve(parent)
            if label in FURNITURE_LABELS:
                raise LabelPlacementViolation(f"{label.value} must be placed in furniture")
            if isinstance(target, GroupItem):
                attach = target.children.append
            elif isinstance(target, (TableItem, PictureItem)):
                if label is not ItemLabel.CAPTION:
                    raise UnresolvableParent(f"only captions can be attached to {parent}")
                if target.caption is not None:
                    raise LabelPlacementViolation(f"{parent} already has a caption")

                def attach(ref: NodeRef, target=target) -> None:
                    target.caption = ref

            else:
                raise UnresolvableParent(f"{parent} is not a group, table or picture")
        else:
            raise UnresolvableParent(f"bad parent {parent!r}")

        store = self._store(_STORE_OF[type(item)])
        ref = NodeRef(_STORE_OF[type(item)], len(store))
        store.append(item)
        attach(ref)
        return ref

    def add_text(self, label, text: str, parent=None, prov=None, level=None) -> NodeRef:
        return self.add_item(TextItem(ItemLabel(label), text, list(prov or []), level), parent)

    def add_group(self, label=ItemLabel.GROUP, name: str = "group", parent=None) -> NodeRef:
        return self.add_item(GroupItem(ItemLabel(label), name), parent)

    def add_table(self, data: TableStructure, parent=None, prov=None) -> NodeRef:
        return self.add_item(TableItem(data, None, list(prov or [])), parent)

    def add_picture(self, parent=None, prov=None) -> NodeRef:
        return self.add_item(PictureItem(None, None, list(prov or [])), parent)

    # -- traversal ---------------------------------------------------------

    def children_of(self, ref: NodeRef) -> list[NodeRef]:
        item = self.resolve(ref)
        if isinstance(item, GroupItem):
            return item.children
        if isinstance(item, (TableItem, PictureItem)) and item.caption is not None:
            return [item.caption]
        return []

    def iterate_items(
        self, include_furniture: bool = False
    ) -> Iterator[tuple[NodeRef, DocItem, int]]:
        """Depth-first pre-order walk of the body (then furniture if asked)."""
        roots = list(self.body)
        if include_furniture:
            roots += self.furniture
        stack = [(ref, 0) for ref in reversed(roots)]
        while stack:
            ref, depth = stack.pop()
            item = self.resolve(ref)
            yield ref, item, depth
            for child in reversed(self.children_of(ref)):
                stack.append((child, depth + 1))

    def body_item_count(self) -> int:
        return sum(1 for _ in self.iterate_items())

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        """Check ref resolution, single parentage and label placement."""
        seen: set[NodeRef] = set()

        def visit(ref: NodeRef, where: str) -> None:
            store = self._store(ref.store)
            if ref.index >= len(store):
                raise DanglingRef(f"{where} refers to {ref.store.value}[{ref.index}]")
            if ref in seen:
                raise MalformedPayload(f"{ref} has more than one parent")
            seen.add(ref)

        for ref in self.body:
            visit(ref, "body")
        for ref in self.furniture:
            visit(ref, "furniture")
        for kind in StoreKind:
            for i, item in enumerate(self._store(kind)):
                here = f"{kind.value}[{i}]"
                if isinstance(item, GroupItem):
                    for child in item.children:
                        visit(child, here)
                elif isinstance(item, (TableItem, PictureItem)) and item.caption is not None:
                    visit(item.caption, here)
                    cap = self.texts[item.caption.index] if item.caption.store is StoreKind.TEXTS else None
                    if cap is None or cap.label is not ItemLabel.CAPTION:
                        raise MalformedPayload(f"{here} caption is not a caption text")
        total = sum(len(self._store(k)) for k in StoreKind)
        if len(seen) != total:
            raise MalformedPayload(f"{total - len(seen)} stored items have no parent")

        furniture_roots = set(self.furniture)
        for ref, item, _ in self.iterate_items(include_furniture=True):
            in_furniture = ref in furniture_roots
            if (item.label in FURNITURE_LABELS) != in_furniture:
                raise MalformedPayload(f"{item.label.value} placed in wrong tree at {ref}")
        # cycles would make some item unreachable from the roots
        reachable = sum(1 for _ in self.iterate_items(include_furniture=True))
        if reachable != total:
            raise MalformedPayload("reference structure contains a cycle")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "origin": _origin_to_dict(self.origin),
            "body": [r.to_dict() for r in self.body],
            "furniture": [r.to_dict() for r in self.furniture],
            "texts": [_text_to_dict(t) for t in self.texts],
            "tables": [_table_to_dict(t) for t in self.tables],
            "pictures": [_picture_to_dict(p) for p in self.pictures],
            "groups": [_group_to_dict(g) for g in self.groups],
        }

    def to_json(self, indent: Optional[int] = 2) -> bytes:
        text = json.dumps(self.to_dict(), ensure_ascii=False, indent=indent, allow_nan=False)
        return text.encode("utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> DoclingDocument:
        data = _obj(data, "document")
        version = data.get("schema_version")
        if not isinstance(version, str):
            raise MalformedPayload("missing schema_version")
        try:
            major = int(version.split(".")[0])
        except ValueError as exc:
            raise SchemaVersionMismatch(f"unparseable schema_version {version!r}") from exc
        if major != int(SCHEMA_VERSION.split(".")[0]):
            raise SchemaVersionMismatch(f"unsupported schema_version {version}")
        try:
            doc = cls(
                name=_str(data, "name"),
                origin=_origin_from_dict(data.get("origin")),
                body=[NodeRef.from_dict(_obj(r, "ref")) for r in _list(data, "body")],
                furniture=[NodeRef.from_dict(_obj(r, "ref")) for r in _list(data, "furniture")],
                texts=[_text_from_dict(_obj(t, "text")) for t in _list(data, "texts")],
                tables=[_table_from_dict(_obj(t, "table")) for t in _list(data, "tables")],
                pictures=[_picture_from_dict(_obj(p, "picture")) for p in _list(data, "pictures")],
                groups=[_group_from_dict(_obj(g, "group")) for g in _list(data, "groups")],
            )
        except (ValueError, TypeError) as exc:
            if isinstance(exc, MalformedPayload):
                raise
            raise MalformedPayload(str(exc)) from exc
        doc.validate()
        return doc

    @classmethod
    def from_json(cls, payload: Union[bytes, str]) -> DoclingDocument:
        try:
            data = json.loads(payload)
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedPayload(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def new_document(name: str, origin: Optional[DocumentOrigin] = None) -> DoclingDocument:
    return DoclingDocument(name=name, origin=origin)


# ---------------------------------------------------------------------------
# (de)serialization helpers
# ---------------------------------------------------------------------------


def _obj(value, what: str) -> dict:
    if not isinstance(value, dict):
        raise MalformedPayload(f"{what} must be an object")
    return value


def _list(data: dict, key: str) -> list:
    value = data.get(key)
    if not isinstance(value, list):
        raise MalformedPayload(f"{key!r} must be a list")
    return value


def _str(data: dict, key: str) -> str:
    value = data.get(key)
    if not isinstance(value, str):
        raise MalformedPayload(f"{key!r} must be a string")
    return value


def _int(data: dict, key: str) -> int:
    value = data.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedPayload(f"{key!r} must be an integer")
    return value


def _num(data: dict, key: str) -> float:
    value = data.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise MalformedPayload(f"{key!r} must be a number")
    return float(value)


def _origin_to_dict(origin: Optional[DocumentOrigin]) -> Optional[dict]:
    if origin is None:
        return None
    return {
        "mimetype": origin.mimetype,
        "filename": origin.filename,
        "binary_hash": origin.binary_hash,
    }


def _origin_from_dict(data) -> Optional[DocumentOrigin]:
    if data is None:
        return None
    data = _obj(data, "origin")
    h = _int(data, "binary_hash")
    if not 0 <= h < 2**64:
        raise MalformedPayload("binary_hash must be a 64-bit unsigned integer")
    return DocumentOrigin(_str(data, "mimetype"), _str(data, "filename"), h)


def _prov_to_dict(p: Provenance) -> dict:
    return {
        "page_no": p.page_no,
        "bbox": p.bbox.to_dict() if p.bbox else None,
        "charspan": list(p.charspan) if p.charspan is not None else None,
    }


def _prov_from_dict(data: dict) -> Provenance:
    data = _obj(data, "provenance")
    bbox = data.get("bbox")
    span = data.get("charspan")
    if span is not None:
        if not (isinstance(span, list) and len(span) == 2 and all(isinstance(x, int) for x in span)):
            raise MalformedPayload(f"bad charspan {span!r}")
        span = (span[0], span[1])
    return Provenance(
        page_no=_int(data, "page_no"),
        bbox=BoundingBox.from_dict(_obj(bbox, "bbox")) if bbox is not None else None,
        charspan=span,
    )


def _ref_or_none(value) -> Optional[NodeRef]:
    return NodeRef.from_dict(_obj(value, "ref")) if value is not None else None


def _text_to_dict(t: TextItem) -> dict:
    return {
        "label": t.label.value,
        "text": t.text,
        "level": t.level,
        "prov": [_prov_to_dict(p) for p in t.prov],
    }


def _text_from_dict(data: dict) -> TextItem:
    level = data.get("level")
    if level is not None and (not isinstance(level, int) or isinstance(level, bool)):
        raise MalformedPayload("level must be an integer or null")
    item = TextItem(
        ItemLabel(_str(data, "label")),
        _str(data, "text"),
        [_prov_from_dict(p) for p in _list(data, "prov")],
        level,
    )
    for p in item.prov:
        if p.charspan is not None and p.charspan[1] > len(item.text):
            raise MalformedPayload(f"charspan {p.charspan} exceeds text length")
    return item


def _table_to_dict(t: TableItem) -> dict:
    return {
        "label": "table",
        "data": t.data.to_dict(),
        "caption": t.caption.to_dict() if t.caption else None,
        "prov": [_prov_to_dict(p) for p in t.prov],
    }


def _table_from_dict(data: dict) -> TableItem:
    return TableItem(
        TableStructure.from_dict(_obj(data.get("data"), "table data")),
        _ref_or_none(data.get("caption")),
        [_prov_from_dict(p) for p in _list(data, "prov")],
    )


def _picture_to_dict(p: PictureItem) -> dict:
    return {
        "label": "picture",
        "caption": p.caption.to_dict() if p.caption else None,
        "classification": p.classification,
        "prov": [_prov_to_dict(x) for x in p.prov],
    }


def _picture_from_dict(data: dict) -> PictureItem:
    cls_ = data.get("classification")
    if cls_ is not None and not isinstance(cls_, str):
        raise MalformedPayload("classification must be a string or null")
    return PictureItem(
        _ref_or_none(data.get("caption")),
        cls_,
        [_prov_from_dict(p) for p in _list(data, "prov")],
    )


def _group_to_dict(g: GroupItem) -> dict:
    return {
        "label": g.label.value,
        "name": g.name,
        "children": [c.to_dict() for c in g.children],
    }


def _group_from_dict(data: dict) -> GroupItem:
    return GroupItem(
        ItemLabel(_str(data, "label")),
        _str(data, "name"),
        [NodeRef.from_dict(_obj(c, "ref")) for c in _list(data, "children")],
    )
