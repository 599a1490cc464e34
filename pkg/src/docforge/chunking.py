"""Chunkers: documents to grounded retrieval units.

Every chunker yields chunks whose ``item_refs`` together cover each
text-bearing body item exactly once, in traversal order. What counts as
text-bearing: text items (captions included) and tables.
"""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from docforge.export import strip_list_marker, table_to_markdown
from docforge.model import (
    BoundingBox,
    DoclingDocument,
    GroupItem,
    ItemLabel,
    NodeRef,
    PictureItem,
    TableItem,
    TextItem,
)


@dataclass
class ChunkMeta:
    doc_name: str
    headings: list[str] = field(default_factory=list)
    item_refs: list[NodeRef] = field(default_factory=list)
    pages: list[int] = field(default_factory=list)
    bboxes: list[BoundingBox] = field(default_factory=list)
    # 0 for whole items and first pieces; later pieces of a split item count up
    part: int = 0

    def to_dict(self) -> dict:
        return {
            "doc_name": self.doc_name,
            "headings": list(self.headings),
            "item_refs": [r.to_dict() for r in self.item_refs],
            "pages": list(self.pages),
            "bboxes": [b.to_dict() for b in self.bboxes],
            "part": self.part,
        }


@dataclass
class Chunk:
    text: str
    meta: ChunkMeta

    def __post_init__(self) -> None:
        if not self.meta.item_refs:
            raise ValueError("a chunk must reference at least one item")

    def to_dict(self) -> dict:
        return {"text": self.text, "meta": self.meta.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=False)


def is_text_bearing(item) -> bool:
    return isinstance(item, (TextItem, TableItem))


def body_text_refs(doc: DoclingDocument) -> list[NodeRef]:
    """Text-bearing body items in traversal order; the set a chunker must cover."""
    return [ref for ref, item, _ in doc.iterate_items() if is_text_bearing(item)]


def _grounding(doc: DoclingDocument, refs: list[NodeRef]) -> tuple[list[int], list[BoundingBox]]:
    pages: set[int] = set()
    boxes: list[BoundingBox] = []
    for ref in refs:
        item = doc.resolve(ref)
        for prov in getattr(item, "prov", []):
            pages.add(prov.page_no)
            if prov.bbox is not None and prov.bbox not in boxes:
                boxes.append(prov.bbox)
    return sorted(pages), boxes


class BaseChunker(abc.ABC):
    @abc.abstractmethod
    def chunk(self, doc: DoclingDocument) -> Iterator[Chunk]:
        ...

    def make(self, doc: DoclingDocument, text: str, refs: list[NodeRef], headings: list[str]) -> Chunk:
        pages, boxes = _grounding(doc, refs)
        return Chunk(text, ChunkMeta(doc.name, list(headings), list(refs), pages, boxes))


def _walk(doc: DoclingDocument) -> Iterator[tuple[NodeRef, object, list[str], Optional[NodeRef], list[NodeRef]]]:
    """(ref, item, heading path, enclosing group, header refs on the path) for every body item, pre-order."""

    def visit(ref: NodeRef, path: list[str], heads: list[NodeRef], group: Optional[NodeRef]):
        item = doc.resolve(ref)
        yield ref, item, path, group, heads
        if isinstance(item, GroupItem):
            inner, inner_heads = list(path), list(heads)
            for child in item.children:
                child_item = doc.resolve(child)
                if isinstance(child_item, TextItem) and child_item.label is ItemLabel.SECTION_HEADER \
                        and item.name == "section":
                    inner, inner_heads = path + [child_item.text], heads + [child]
                    yield child, child_item, path, ref, heads
                    continue
                yield from visit(child, inner, inner_heads, ref)
        elif isinstance(item, (TableItem, PictureItem)) and item.caption is not None:
            yield item.caption, doc.resolve(item.caption), path, ref, heads

    for root in doc.body:
        yield from visit(root, [], [], None)


class IdentityChunker(BaseChunker):
    """One chunk per text-bearing item, nothing merged or folded."""

    def chunk(self, doc: DoclingDocument) -> Iterator[Chunk]:
        for ref, item, path, _, _ in _walk(doc):
            if isinstance(item, TextItem):
                yield self.make(doc, item.text, [ref], path)
            elif isinstance(item, TableItem):
                yield self.make(doc, table_to_markdown(item.data), [ref], path)


class HierarchicalChunker(BaseChunker):
    """One chunk per body leaf, with list runs merged and captions folded in.

    Section headers do not form chunks of their own: they show up in the
    ``headings`` path, and their refs ride along with the next chunk of
    their section so coverage still holds. A header whose section has no
    chunk of its own becomes a chunk holding just its text. ``max_chars`` (off by default) splits a long
    text item at paragraph breaks, falling back to sentence ends; pieces
    after the first carry ``part > 0`` and repeat the item ref.
    """

    def __init__(self, max_chars: Optional[int] = None) -> None:
        if max_chars is not None and max_chars < 1:
            raise ValueError("max_chars must be positive")
        self.max_chars = max_chars

    def chunk(self, doc: DoclingDocument) -> Iterator[Chunk]:
        headers: list[tuple[NodeRef, list[str]]] = []  # pending header refs with their own paths
        run: list[tuple[NodeRef, str]] = []
        run_group: Optional[NodeRef] = None
        run_path: list[str] = []
        run_heads: list[NodeRef] = []

        def emit(text: str, refs: list[NodeRef], path: list[str], heads: list[NodeRef]) -> Iterator[Chunk]:
            # a header rides along only into its own section; one left empty keeps its text as a chunk
            # everything up to the last such header goes out first, keeping traversal order
            cut = max((i + 1 for i, (h, _) in enumerate(headers) if h not in heads), default=0)
            if cut:
                yield self.make(doc, "\n".join(doc.resolve(h).text for h, _ in headers[:cut]),
                                [h for h, _ in headers[:cut]], headers[0][1])
            riding = [h for h, _ in headers[cut:]]
            headers.clear()
            yield self.make(doc, text, riding + refs, path)

        def flush() -> Iterator[Chunk]:
            nonlocal run, run_group
            if run:
                yield from emit("\n".join(t for _, t in run), [r for r, _ in run], run_path, run_heads)
            run, run_group = [], None

        for ref, item, path, group, heads in _walk(doc):
            if isinstance(item, TextItem) and item.label is ItemLabel.LIST_ITEM:
                if run and group != run_group:
                    yield from flush()
                if not run:
                    run_path, run_heads = path, heads
                run.append((ref, strip_list_marker(item.text)))
                run_group = group
                continue
            if isinstance(item, GroupItem) and item.label is ItemLabel.LIST and group == run_group:
                continue  # a nested list continues the run until another group's item arrives
            if isinstance(item, TextItem) and item.label is ItemLabel.CAPTION \
                    and group is not None and isinstance(doc.resolve(group), (TableItem, PictureItem)):
                continue  # folded into its target
            yield from flush()
            if isinstance(item, TextItem) and item.label is ItemLabel.SECTION_HEADER:
                headers.append((ref, path))
            elif isinstance(item, TableItem):
                parts, refs = [], [ref]
                if item.caption is not None:
                    parts.append(doc.resolve(item.caption).text)
                    refs.append(item.caption)
                parts.append(table_to_markdown(item.data))
                yield from emit("\n\n".join(p for p in parts if p), refs, path, heads)
            elif isinstance(item, PictureItem):
                if item.caption is not None:
                    yield from emit(doc.resolve(item.caption).text, [item.caption], path, heads)
            elif isinstance(item, TextItem):
                pieces = [item.text]
                if self.max_chars is not None and len(item.text) > self.max_chars:
                    pieces = _soft_split(item.text, self.max_chars)
                yield from emit(pieces[0], [ref], path, heads)
                for i, piece in enumerate(pieces[1:], 1):
                    chunk = self.make(doc, piece, [ref], path)
                    chunk.meta.part = i
                    yield chunk
        yield from flush()
        if headers:
            yield self.make(doc, "\n".join(doc.resolve(h).text for h, _ in headers), [h for h, _ in headers],
                            headers[0][1])


def _soft_split(text: str, limit: int) -> list[str]:
    units = [p for p in text.split("\n\n") if p]
    if len(units) == 1:
        units = _sentences(text)
    out: list[str] = []
    cur = ""
    for unit in units:
        cand = f"{cur}\n\n{unit}" if cur and "\n\n" in text else (f"{cur} {unit}" if cur else unit)
        if cur and len(cand) > limit:
            out.append(cur)
            cur = unit
        else:
            cur = cand
    if cur:
        out.append(cur)
    return out


def _sentences(text: str) -> list[str]:
    out, start = [], 0
    for i, ch in enumerate(text):
        if ch in ".!?" and (i + 1 == len(text) or text[i + 1] == " "):
            out.append(text[start:i + 1].strip())
            start = i + 1
    if text[start:].strip():
        out.append(text[start:].strip())
    return out


def coverage(chunks: Iterable[Chunk], doc: DoclingDocument) -> tuple[list[NodeRef], list[NodeRef]]:
    """(missing, duplicated) text-bearing refs for a chunk stream; both empty when the law holds.

    Later pieces of a split item are not counted again.
    """
    seen: list[NodeRef] = []
    for ch in chunks:
        if ch.meta.part:
            continue
        seen.extend(ch.meta.item_refs)
    expected = body_text_refs(doc)
    expected_set = set(expected)
    counts: dict[NodeRef, int] = {}
    for ref in seen:
        counts[ref] = counts.get(ref, 0) + 1
    missing = [r for r in expected if counts.get(r, 0) == 0]
    duplicated = [r for r, n in counts.items() if n > 1 or r not in expected_set]
    return missing, duplicated


def in_traversal_order(chunks: Iterable[Chunk], doc: DoclingDocument) -> bool:
    position = {ref: i for i, ref in enumerate(body_text_refs(doc))}
    last = -1
    for ch in chunks:
        for ref in ch.meta.item_refs:
            pos = position.get(ref)
            if pos is None:
                continue
            if pos < last and not ch.meta.part:
                return False
            last = max(last, pos)
    return True


def chunk_hierarchical(doc: DoclingDocument, max_chars: Optional[int] = None) -> list[Chunk]:
    return list(HierarchicalChunker(max_chars).chunk(doc))


def to_jsonl(chunks: Iterable[Chunk]) -> str:
    return "".join(ch.to_json() + "\n" for ch in chunks)
