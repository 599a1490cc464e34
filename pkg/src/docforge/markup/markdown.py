"""Markdown backend: a line-oriented block parser for a CommonMark subset.

Supported blocks: ATX headings, paragraphs, bullet and ordered lists
(nested by indentation), fenced code, block quotes, images, GitHub pipe
tables and the ``<!-- image -->`` / ``<!-- table -->`` placeholders the
exporter writes. Inline markup is flattened to plain text. Setext
underlines and raw HTML blocks are kept as paragraphs with a warning.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
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

FENCE_RE = re.compile(r"^( {0,3})(`{3,}|~{3,})(.*)$")
ATX_RE = re.compile(r"^ {0,3}(#{1,6})(?:[ \t]+(.*?))?(?:[ \t]+#+)?[ \t]*$")
THEMATIC_RE = re.compile(r"^ {0,3}([-*_])(?:[ \t]*\1){2,}[ \t]*$")
SETEXT_RE = re.compile(r"^ {0,3}(=+|-+)[ \t]*$")
QUOTE_RE = re.compile(r"^ {0,3}> ?(.*)$")
LIST_RE = re.compile(r"^( *)([-+*]|\d{1,9}[.)])(?:( +)(.*)|[ \t]*$)")
HTML_BLOCK_RE = re.compile(r"^ {0,3}<(?:[A-Za-z][A-Za-z0-9-]*[\s/>]|[A-Za-z][A-Za-z0-9-]*$|/[A-Za-z]|!--|![A-Z]|\?)")
DELIM_CELL_RE = re.compile(r"^:?-+:?$")
IMAGE_RE = re.compile(r"^!\[([^\]]*)\]\(([^)]*)\)$")
CAPTION_RE = re.compile(r"^(?:\*(?!\*)(.+?)\*|_(?!_)(.+?)_)$")

IMAGE_PLACEHOLDER = "<!-- image -->"
TABLE_PLACEHOLDER = "<!-- table -->"


# ---------------------------------------------------------------------------
# inline flattening
# ---------------------------------------------------------------------------

_CODE_SPAN = re.compile(r"(`+)(.+?)\1", re.S)
_IMAGE = re.compile(r"!\[([^\]]*)\]\([^)]*\)")
_LINK = re.compile(r"\[([^\]]*)\]\([^)]*\)")
_REF_LINK = re.compile(r"\[([^\]]+)\]\[[^\]]*\]")
_AUTOLINK = re.compile(r"<((?:https?|ftp|mailto):[^>\s]+)>")
_TAG = re.compile(r"</?[A-Za-z][^>]*>")
_STRONG = re.compile(r"(\*\*|__)(?=\S)(.+?)(?<=\S)\1")
_EM_STAR = re.compile(r"\*(?=[^\s*])(.+?)(?<=[^\s*])\*")
_EM_UNDER = re.compile(r"(?<![A-Za-z0-9])_(?=\S)(.+?)(?<=\S)_(?![A-Za-z0-9])")
_STRIKE = re.compile(r"~~(?=\S)(.+?)(?<=\S)~~")
_ESCAPE = re.compile(r"\\([!-/:-@\[-`{-~])")


def flatten_inline(text: str) -> str:
    """Plain text of an inline run: markers dropped, link targets dropped."""
    spans: list[str] = []

    def keep(m: re.Match) -> str:
        spans.append(m.group(2))
        return f"\x00{len(spans) - 1}\x00"

    # protect escapes first, then code spans, which are literal
    escapes: list[str] = []

    def esc(m: re.Match) -> str:
        escapes.append(m.group(1))
        return f"\x01{len(escapes) - 1}\x01"

    text = _ESCAPE.sub(esc, text)
    text = _CODE_SPAN.sub(keep, text)
    text = _IMAGE.sub(lambda m: m.group(1), text)
    text = _LINK.sub(lambda m: m.group(1), text)
    text = _REF_LINK.sub(lambda m: m.group(1), text)
    text = _AUTOLINK.sub(lambda m: m.group(1), text)
    text = _TAG.sub("", text)
    for _ in range(4):
        before = text
        text = _STRONG.sub(lambda m: m.group(2), text)
        text = _EM_STAR.sub(lambda m: m.group(1), text)
        text = _EM_UNDER.sub(lambda m: m.group(1), text)
        text = _STRIKE.sub(lambda m: m.group(1), text)
        if text == before:
            break
    text = html.unescape(text)
    text = re.sub(r"\x00(\d+)\x00", lambda m: spans[int(m.group(1))], text)
    text = re.sub(r"\x01(\d+)\x01", lambda m: escapes[int(m.group(1))], text)
    return re.sub(r"\s+", " ", text).strip()


# ---------------------------------------------------------------------------
# block parsing
# ---------------------------------------------------------------------------


@dataclass
class MdBlock:
    kind: str  # heading, para, code, image, table, list, quote
    text: str = ""
    level: int = 0
    rows: list[list[str]] = field(default_factory=list)
    ordered: bool = False
    items: list[list["MdBlock"]] = field(default_factory=list)
    children: list["MdBlock"] = field(default_factory=list)


def _indent(line: str) -> int:
    return len(line) - len(line.lstrip(" "))


def _split_row(line: str) -> list[str]:
    s = line.strip()
    if s.startswith("|"):
        s = s[1:]
    if s.endswith("|") and not s.endswith("\\|"):
        s = s[:-1]
    cells, cur, i = [], [], 0
    while i < len(s):
        ch = s[i]
        if ch == "\\" and i + 1 < len(s) and s[i + 1] == "|":
            cur.append("|")
            i += 2
            continue
        if ch == "|":
            cells.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
        i += 1
    cells.append("".join(cur).strip())
    return cells


def _is_delim_row(line: str) -> bool:
    if "-" not in line:
        return False
    cells = _split_row(line)
    return bool(cells) and all(DELIM_CELL_RE.match(c) for c in cells)


def _table_start(lines: list[str], i: int) -> bool:
    if i + 1 >= len(lines) or "|" not in lines[i]:
        return False
    return _is_delim_row(lines[i + 1]) and len(_split_row(lines[i])) == len(_split_row(lines[i + 1]))


def _starts_block(lines: list[str], i: int) -> bool:
    line = lines[i]
    return bool(
        FENCE_RE.match(line) or ATX_RE.match(line) or THEMATIC_RE.match(line)
        or QUOTE_RE.match(line) or LIST_RE.match(line) or HTML_BLOCK_RE.match(line)
        or _table_start(lines, i)
    )


class BlockParser:
    def __init__(self, warnings: Optional[list[str]] = None) -> None:
        self.warnings = warnings if warnings is not None else []

    def _warn(self, msg: str) -> None:
        if msg not in self.warnings:
            self.warnings.append(msg)

    def parse(self, lines: list[str]) -> list[MdBlock]:
        blocks: list[MdBlock] = []
        i, n = 0, len(lines)
        while i < n:
            line = lines[i]
            if not line.strip():
                i += 1
                continue
            if m := FENCE_RE.match(line):
                i = self._fence(lines, i, m, blocks)
            elif m := ATX_RE.match(line):
                blocks.append(MdBlock("heading", flatten_inline(m.group(2) or ""), level=len(m.group(1))))
                i += 1
            elif THEMATIC_RE.match(line):
                i += 1
            elif QUOTE_RE.match(line):
                inner = []
                while i < n and (m := QUOTE_RE.match(lines[i])):
                    inner.append(m.group(1))
                    i += 1
                blocks.append(MdBlock("quote", children=self.parse(inner)))
            elif LIST_RE.match(line):
                i = self._list(lines, i, blocks)
            elif _table_start(lines, i):
                i = self._table(lines, i, blocks)
            elif HTML_BLOCK_RE.match(line):
                i = self._html(lines, i, blocks)
            else:
                i = self._paragraph(lines, i, blocks)
        return blocks

    def _fence(self, lines: list[str], i: int, m: re.Match, blocks: list[MdBlock]) -> int:
        indent, fence = len(m.group(1)), m.group(2)
        body = []
        i += 1
        while i < len(lines):
            close = FENCE_RE.match(lines[i])
            if close and close.group(2)[0] == fence[0] and len(close.group(2)) >= len(fence) \
                    and not close.group(3).strip():
                i += 1
                break
            line = lines[i]
            body.append(line[min(indent, _indent(line)):])
            i += 1
        blocks.append(MdBlock("code", "\n".join(body)))
        return i

    def _paragraph(self, lines: list[str], i: int, blocks: list[MdBlock]) -> int:
        buf = [lines[i].strip()]
        i += 1
        while i < len(lines) and lines[i].strip():
            if SETEXT_RE.match(lines[i]):
                self._warn("markdown: setext heading kept as a paragraph")
                i += 1
                break
            if _starts_block(lines, i):
                break
            buf.append(lines[i].strip())
            i += 1
        raw = " ".join(buf)
        if IMAGE_RE.match(raw):
            blocks.append(MdBlock("image"))
        else:
            blocks.append(MdBlock("para", raw))
        return i

    def _html(self, lines: list[str], i: int, blocks: list[MdBlock]) -> int:
        buf = []
        while i < len(lines) and lines[i].strip():
            buf.append(lines[i].strip())
            i += 1
        raw = " ".join(buf)
        if raw == IMAGE_PLACEHOLDER:
            blocks.append(MdBlock("image"))
        elif raw == TABLE_PLACEHOLDER:
            blocks.append(MdBlock("table"))
        else:
            self._warn("markdown: HTML block kept as a paragraph")
            if flatten_inline(raw):
                blocks.append(MdBlock("para", raw))
        return i

    def _table(self, lines: list[str], i: int, blocks: list[MdBlock]) -> int:
        header = _split_row(lines[i])
        width = len(header)
        rows = [header]
        i += 2
        while i < len(lines) and lines[i].strip() and "|" in lines[i]:
            if _starts_block(lines, i) and not lines[i].lstrip().startswith("|"):
                break
            row = _split_row(lines[i])[:width]
            rows.append(row + [""] * (width - len(row)))
            i += 1
        blocks.append(MdBlock("table", rows=[[flatten_inline(c) for c in r] for r in rows]))
        return i

    def _list(self, lines: list[str], i: int, blocks: list[MdBlock]) -> int:
        first = LIST_RE.match(lines[i])
        base = len(first.group(1))
        kind = _marker_kind(first.group(2))
        block = MdBlock("list", ordered=kind[0] == "o")
        n = len(lines)
        while i < n:
            m = LIST_RE.match(lines[i])
            if not m or len(m.group(1)) > base + 1 or len(m.group(1)) < base or _marker_kind(m.group(2)) != kind:
                break
            marker_end = len(m.group(1)) + len(m.group(2))
            gap = len(m.group(3) or " ")
            offset = marker_end + (gap if gap <= 4 else 1)
            item = [m.group(4) or ""] if gap <= 4 else [" " * (gap - 1) + (m.group(4) or "")]
            i += 1
            last_blank = False
            while i < n:
                line = lines[i]
                if not line.strip():
                    j = i
                    while j < n and not lines[j].strip():
                        j += 1
                    if j < n and _indent(lines[j]) >= base + 2:
                        item.extend([""] * (j - i))
                        i = j
                        last_blank = True
                        continue
                    break
                ind = _indent(line)
                if ind >= base + 2:
                    item.append(line[min(offset, ind):])
                elif not last_blank and not _starts_block(lines, i) and item and item[-1].strip():
                    item.append(line.strip())  # lazy continuation
                else:
                    break
                last_blank = False
                i += 1
            block.items.append(self.parse(item))
        blocks.append(block)
        return i


def _marker_kind(marker: str) -> tuple[str, str]:
    return ("o", marker[-1]) if marker[-1] in ".)" and marker[:-1].isdigit() else ("u", marker)


# ---------------------------------------------------------------------------
# blocks -> document
# ---------------------------------------------------------------------------


def _caption_text(raw: str) -> Optional[str]:
    m = CAPTION_RE.match(raw)
    if not m:
        return None
    return flatten_inline(m.group(1) or m.group(2))


class _Emitter:
    def __init__(self, doc: DoclingDocument) -> None:
        self.doc = doc
        self.sections = SectionStack(doc)

    def emit(self, blocks: list[MdBlock], container: Optional[NodeRef] = None) -> None:
        target: Optional[NodeRef] = None
        for blk in blocks:
            parent = container if container is not None else self.sections.parent
            ref: Optional[NodeRef] = None
            if blk.kind == "heading":
                if not blk.text:
                    continue
                if container is not None:
                    self._text(ItemLabel.TEXT, blk.text, parent)
                else:
                    self.sections.heading(blk.text, blk.level, markup_prov(blk.text))
            elif blk.kind == "para":
                caption = _caption_text(blk.text) if target is not None else None
                if caption:
                    self.doc.add_text(ItemLabel.CAPTION, caption, target, markup_prov(caption))
                else:
                    self._text(ItemLabel.TEXT, flatten_inline(blk.text), parent)
            elif blk.kind == "code":
                self.doc.add_text(ItemLabel.CODE, blk.text, parent, markup_prov(blk.text))
            elif blk.kind == "image":
                ref = self.doc.add_picture(parent, markup_prov())
            elif blk.kind == "table":
                ref = self.doc.add_table(_structure(blk.rows), parent, markup_prov())
            elif blk.kind == "list":
                self._list(blk, parent)
            elif blk.kind == "quote":
                group = self.doc.add_group(ItemLabel.GROUP, "blockquote", parent)
                self.emit(blk.children, group)
            target = ref

    def _text(self, label: ItemLabel, text: str, parent: Optional[NodeRef]) -> None:
        if text:
            self.doc.add_text(label, text, parent, markup_prov(text))

    def _list(self, blk: MdBlock, parent: Optional[NodeRef]) -> None:
        group = self.doc.add_group(ItemLabel.LIST, "ordered-list" if blk.ordered else "list", parent)
        for item in blk.items:
            rest = item
            if item and item[0].kind in ("para", "heading"):
                text = flatten_inline(item[0].text) if item[0].kind == "para" else item[0].text
                rest = item[1:]
                self.doc.add_text(ItemLabel.LIST_ITEM, text, group, markup_prov(text))
            elif not any(b.kind == "list" for b in item):
                self.doc.add_text(ItemLabel.LIST_ITEM, "", group, markup_prov(""))
            for sub in rest:
                if sub.kind == "list":
                    self._list(sub, group)
                else:
                    self.emit([sub], group)


def _structure(rows: list[list[str]]) -> TableStructure:
    if not rows:
        return TableStructure()
    cells = [
        TableCellSpec(i, j, role=CellRole.COLUMN_HEADER if i == 0 else CellRole.BODY, text=text)
        for i, row in enumerate(rows)
        for j, text in enumerate(row)
    ]
    return TableStructure(len(rows), len(rows[0]), cells)


def parse_markdown(source: MarkupSource, warnings: Optional[list[str]] = None) -> DoclingDocument:
    text = source.text().replace("\r\n", "\n").replace("\r", "\n").expandtabs(4)
    blocks = BlockParser(warnings).parse(text.split("\n"))
    doc = new_document(source.stem, source.origin())
    _Emitter(doc).emit(blocks)
    return doc


def markdown_source(data: Union[bytes, str], base_name: str = "") -> MarkupSource:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return MarkupSource(InputFormat.MARKDOWN, data, base_name)
