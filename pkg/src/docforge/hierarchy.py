"""Section nesting shared by the markup backends and PDF assembly."""

from __future__ import annotations

from typing import Optional

from docforge.model import DoclingDocument, ItemLabel, NodeRef, Provenance


class SectionStack:
    """Each heading opens a group holding the content that follows it.

    A heading of level k closes every open section of level >= k, so a
    level-k section group never sits inside another of level >= k.
    """

    def __init__(self, doc: DoclingDocument) -> None:
        self.doc = doc
        self._open: list[tuple[int, NodeRef]] = []

    @property
    def parent(self) -> Optional[NodeRef]:
        return self._open[-1][1] if self._open else None

    @property
    def headings(self) -> list[int]:
        return [level for level, _ in self._open]

    def heading(self, text: str, level: int, prov: Optional[list[Provenance]] = None) -> NodeRef:
        level = max(1, min(6, level))
        while self._open and self._open[-1][0] >= level:
            self._open.pop()
        group = self.doc.add_group(ItemLabel.GROUP, "section", self.parent)
        self.doc.add_text(ItemLabel.SECTION_HEADER, text, group, prov, level)
        self._open.append((level, group))
        return group

    def reset(self) -> None:
        self._open.clear()
