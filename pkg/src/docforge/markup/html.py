"""HTML backend: a forgiving tree builder plus a DOM walk into a document.

``html.parser`` tokenizes; ``TreeBuilder`` applies the few implied-end-tag
rules that real pages lean on (an open ``<p>`` closes at the next block,
``<li>`` closes the previous ``<li>``, table parts close their siblings)
and counts every such repair as a recovery event.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional, Union

from docforge.hierarchy import SectionStack
from docforge.markup.source import InputFormat, MarkupSource, markup_prov
from docforge.model import (
    CellRole,
    DoclingDocument,
    ItemLabel,
    NodeRef,
    TableCellSpec,
    TableStructure,
    new_document,
)

VOID = frozenset("area base br col embed hr img input link meta param source track wbr".split())
SKIP = frozenset("head script style template noscript title".split())
HEADINGS = {f"h{i}": i for i in range(1, 7)}
CLOSES_P = frozenset(
    "address article aside blockquote details dialog div dl dd dt fieldset figcaption figure footer "
    "form h1 h2 h3 h4 h5 h6 header hgroup hr li main menu nav ol p pre section table ul".split()
)
BLOCKS = CLOSES_P | frozenset(
    "body html caption center summary thead tbody tfoot tr td th img".split()
)
# open elements that stop the search for an implicitly closed element
P_SCOPE = frozenset("table td th caption html button object template".split())
LI_SCOPE = frozenset("ul ol menu table td th".split())
DD_SCOPE = frozenset("dl table td th".split())
CELL_SCOPE = frozenset("tr table".split())
ROW_SCOPE = frozenset("table thead tbody tfoot".split())
SECTION_SCOPE = frozenset("table".split())

_WS = re.compile(r"\s+")


@dataclass
class Element:
    tag: str
    attrs: dict = field(default_factory=dict)
    children: list[Union["Element", str]] = field(default_factory=list)

    def elements(self, *tags: str) -> list["Element"]:
        return [c for c in self.children if isinstance(c, Element) and (not tags or c.tag in tags)]

    def find(self, tag: str) -> Optional["Element"]:
        for child in self.children:
            if isinstance(child, Element):
                if child.tag == tag:
                    return child
                hit = child.find(tag)
                if hit is not None:
                    return hit
        return None


class TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Element("#document")
        self.stack: list[Element] = [self.root]
        self.recoveries: list[str] = []

    # -- helpers ---------------------------------------------------------------

    def _close_implied(self, tags: frozenset, scope: frozenset, before: str) -> None:
        for i in range(len(self.stack) - 1, 0, -1):
            tag = self.stack[i].tag
            if tag in tags:
                for el in self.stack[i:]:
                    self.recoveries.append(f"implied </{el.tag}> before <{before}>")
                del self.stack[i:]
                return
            if tag in scope:
                return

    def _open(self, tag: str, attrs: list) -> Element:
        el = Element(tag, {k: (v or "") for k, v in attrs})
        self.stack[-1].children.append(el)
        return el

    # -- HTMLParser hooks ------------------------------------------------------

    def handle_starttag(self, tag: str, attrs: list) -> None:
        if tag in CLOSES_P:
            self._close_implied(frozenset({"p"}), P_SCOPE, tag)
        if tag == "li":
            self._close_implied(frozenset({"li"}), LI_SCOPE, tag)
        elif tag in ("dt", "dd"):
            self._close_implied(frozenset({"dt", "dd"}), DD_SCOPE, tag)
        elif tag in ("td", "th"):
            self._close_implied(frozenset({"td", "th"}), CELL_SCOPE, tag)
        elif tag == "tr":
            self._close_implied(frozenset({"tr"}), ROW_SCOPE, tag)
        elif tag in ("thead", "tbody", "tfoot"):
            self._close_implied(frozenset({"thead", "tbody", "tfoot"}), SECTION_SCOPE, tag)
        el = self._open(tag, attrs)
        if tag not in VOID:
            self.stack.append(el)

    def handle_startendtag(self, tag: str, attrs: list) -> None:
        self.handle_starttag(tag, attrs)
        if tag not in VOID and self.stack[-1].tag == tag:
            self.stack.pop()

    def handle_endtag(self, tag: str) -> None:
        if tag in VOID:
            return
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                for el in self.stack[i + 1:]:
                    self.recoveries.append(f"implied </{el.tag}> before </{tag}>")
                del self.stack[i:]
                return
        self.recoveries.append(f"stray </{tag}> ignored")

    def handle_data(self, data: str) -> None:
        self.stack[-1].children.append(data)

    def close(self) -> None:
        super().close()
        for el in self.stack[1:]:
            self.recoveries.append(f"unclosed <{el.tag}> at end of input")
        del self.stack[1:]


def parse_tree(text: str) -> TreeBuilder:
    builder = TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder


def recovery_events(text: str) -> list[str]:
    """Repairs the tree builder had to make; empty for well-formed markup."""
    return parse_tree(text).recoveries


# ---------------------------------------------------------------------------
# text extraction
# ---------------------------------------------------------------------------


def _collect(node: Union[Element, str], out: list[str], skip: frozenset) -> None:
    if isinstance(node, str):
        out.append(node)
        return
    if node.tag in SKIP or node.tag in skip:
        return
    if node.tag == "br":
        out.append(" ")
        return
    block = node.tag in BLOCKS
    if block:
        out.append(" ")
    for child in node.children:
        _collect(child, out, skip)
    if block:
        out.append(" ")


def inline_text(node: Union[Element, str], skip: frozenset = frozenset()) -> str:
    parts: list[str] = []
    _collect(node, parts, skip)
    return _WS.sub(" ", "".join(parts)).strip()


def raw_text(node: Union[Element, str]) -> str:
    if isinstance(node, str):
        return node
    if node.tag == "br":
        return "\n"
    return "".join(raw_text(c) for c in node.children)


# ---------------------------------------------------------------------------
# DOM -> document
# ---------------------------------------------------------------------------


class _DomWalker:
    def __init__(self, doc: DoclingDocument) -> None:
        self.doc = doc
        self.sections = SectionStack(doc)

    def _parent(self, container: Optional[NodeRef]) -> Optional[NodeRef]:
        return container if container is not None else self.sections.parent

    def _text(self, label: ItemLabel, text: str, container: Optional[NodeRef],
              parent: Optional[NodeRef] = None) -> None:
        if text:
            self.doc.add_text(label, text, parent or self._parent(container), markup_prov(text))

    def walk(self, el: Element, container: Optional[NodeRef] = None) -> None:
        pending: list[Union[Element, str]] = []
        for child in el.children:
            if isinstance(child, Element) and child.tag in BLOCKS | SKIP:
                self._flush(pending, container)
                pending = []
                self.block(child, container)
            else:
                pending.append(child)
        self._flush(pending, container)

    def _flush(self, nodes: list[Union[Element, str]], container: Optional[NodeRef]) -> None:
        significant = [n for n in nodes if not (isinstance(n, str) and not n.strip())]
        if not significant:
            return
        if len(significant) == 1 and isinstance(significant[0], Element) and significant[0].tag == "code":
            self._code(significant[0], container)
            return
        self._text(ItemLabel.TEXT, inline_text(Element("#inline", {}, nodes)), container)

    def _code(self, el: Element, container: Optional[NodeRef]) -> None:
        text = raw_text(el)
        if text.startswith("\n"):
            text = text[1:]
        text = text.rstrip("\n")
        if text.strip():
            self.doc.add_text(ItemLabel.CODE, text, self._parent(container), markup_prov(text))

    def block(self, el: Element, container: Optional[NodeRef]) -> None:
        tag = el.tag
        if tag in SKIP or tag == "hr":
            return
        if tag in HEADINGS:
            text = inline_text(el)
            if not text:
                return
            if container is not None:
                self._text(ItemLabel.TEXT, text, container)
            else:
                self.sections.heading(text, HEADINGS[tag], markup_prov(text))
        elif tag == "p":
            self._text(ItemLabel.TEXT, inline_text(el), container)
            for _ in _descendants(el, "img"):
                self.doc.add_picture(self._parent(container), markup_prov())
        elif tag in ("ul", "ol"):
            self.list(el, self._parent(container))
        elif tag == "table":
            self.table(el, container)
        elif tag == "figure":
            self.figure(el, container)
        elif tag == "img":
            self.doc.add_picture(self._parent(container), markup_prov())
        elif tag == "pre":
            self._code(el, container)
        elif tag == "blockquote":
            group = self.doc.add_group(ItemLabel.GROUP, "blockquote", self._parent(container))
            self.walk(el, group)
        elif tag in ("caption", "figcaption"):
            self._text(ItemLabel.CAPTION, inline_text(el), container)
        elif tag in ("li", "dt", "dd"):
            self._text(ItemLabel.TEXT, inline_text(el), container)
        else:
            self.walk(el, container)

    def list(self, el: Element, parent: Optional[NodeRef]) -> None:
        ordered = el.tag == "ol"
        group = self.doc.add_group(ItemLabel.LIST, "ordered-list" if ordered else "list", parent)
        for child in el.elements():
            if child.tag == "li":
                text = inline_text(child, skip=frozenset({"ul", "ol"}))
                nested = _descendants(child, "ul", "ol", stop=frozenset({"ul", "ol"}))
                if text or not nested:
                    self.doc.add_text(ItemLabel.LIST_ITEM, text, group, markup_prov(text))
                for sub in nested:
                    self.list(sub, group)
            elif child.tag in ("ul", "ol"):
                self.list(child, group)

    def figure(self, el: Element, container: Optional[NodeRef]) -> None:
        caption_el = el.find("figcaption")
        caption = inline_text(caption_el) if caption_el is not None else ""
        table = el.find("table")
        if table is not None and el.find("img") is None:
            self.table(table, container, caption)
            return
        ref = self.doc.add_picture(self._parent(container), markup_prov())
        if caption:
            self.doc.add_text(ItemLabel.CAPTION, caption, ref, markup_prov(caption))

    def table(self, el: Element, container: Optional[NodeRef], caption: str = "") -> None:
        rows: list[tuple[Element, bool]] = []
        for child in el.elements():
            if child.tag == "tr":
                rows.append((child, False))
            elif child.tag in ("thead", "tbody", "tfoot"):
                rows.extend((tr, child.tag == "thead") for tr in child.elements("tr"))
            elif child.tag == "caption" and not caption:
                caption = inline_text(child)
        structure = table_structure(rows)
        ref = self.doc.add_table(structure, self._parent(container), markup_prov())
        if caption:
            self.doc.add_text(ItemLabel.CAPTION, caption, ref, markup_prov(caption))


def _descendants(el: Element, *tags: str, stop: frozenset = frozenset()) -> list[Element]:
    out = []
    for child in el.children:
        if isinstance(child, Element):
            if child.tag in tags:
                out.append(child)
            if child.tag not in stop:
                out.extend(_descendants(child, *tags, stop=stop))
    return out


def _span(value: str) -> int:
    try:
        return max(1, min(int(value.strip()), 1000))
    except (ValueError, AttributeError):
        return 1


def table_structure(rows: list[tuple[Element, bool]]) -> TableStructure:
    """Lay out ``<tr>`` rows on a grid honouring rowspan and colspan."""
    occupied: set[tuple[int, int]] = set()
    placed: list[tuple[int, int, int, int, Element, bool]] = []
    nrows = len(rows)
    for i, (tr, in_head) in enumerate(rows):
        j = 0
        for cell in tr.elements("td", "th"):
            while (i, j) in occupied:
                j += 1
            rs = min(_span(cell.attrs.get("rowspan", "1")), nrows - i)
            cs = _span(cell.attrs.get("colspan", "1"))
            for r in range(i, i + rs):
                for c in range(j, j + cs):
                    occupied.add((r, c))
            placed.append((i, j, rs, cs, cell, in_head))
            j += cs
    ncols = max((c + 1 for _, c in occupied), default=0)
    header_rows = {
        i for i, (tr, in_head) in enumerate(rows)
        if in_head or (tr.elements("td", "th") and all(c.tag == "th" for c in tr.elements("td", "th")))
    }
    cells = []
    for i, j, rs, cs, cell, _ in placed:
        if cell.tag == "th":
            role = CellRole.COLUMN_HEADER if i in header_rows else CellRole.ROW_HEADER
        else:
            role = CellRole.COLUMN_HEADER if i in header_rows else CellRole.BODY
        cells.append(TableCellSpec(i, j, rs, cs, role, inline_text(cell)))
    # ragged rows leave holes; fill them so the grid is complete
    for i in range(nrows):
        for j in range(ncols):
            if (i, j) not in occupied:
                cells.append(TableCellSpec(i, j))
    cells.sort(key=lambda c: (c.start_row, c.start_col))
    return TableStructure(nrows, ncols, cells)


def parse_html(source: MarkupSource, warnings: Optional[list[str]] = None) -> DoclingDocument:
    builder = parse_tree(source.text())
    if warnings is not None:
        seen = set()
        for event in builder.recoveries:
            if event not in seen:
                seen.add(event)
                warnings.append(f"html: {event}")
    doc = new_document(source.stem, source.origin())
    _DomWalker(doc).walk(builder.root)
    return doc


def html_source(data: Union[bytes, str], base_name: str = "") -> MarkupSource:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return MarkupSource(InputFormat.HTML, data, base_name)
