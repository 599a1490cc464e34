"""Lossy Markdown and HTML serializers.

Both walk the body in reading order. Neither adds a trailing newline;
``write_export`` does, so files on disk always end with exactly one.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from docforge.model import (
    CellRole,
    DoclingDocument,
    GroupItem,
    ItemLabel,
    NodeRef,
    PictureItem,
    TableItem,
    TableStructure,
    TextItem,
)

IMAGE_PLACEHOLDER = "<!-- image -->"
TABLE_PLACEHOLDER = "<!-- table -->"
LIST_MARKER_RE = re.compile(r"^(?:[•·▪‣◦\-*+]|\d{1,9}[.)])\s+")
# a paragraph starting like this would re-parse as some other block
_BLOCK_START_RE = re.compile(r"^(?:#|>|[-+*](?:\s|$)|\d{1,9}[.)](?:\s|$)|`{3}|~{3}|<|\|)")


@dataclass
class ExportOptions:
    include_furniture: bool = False
    image_placeholder: str = IMAGE_PLACEHOLDER


def strip_list_marker(text: str) -> str:
    """Drop a bullet or number the source text already carries."""
    return LIST_MARKER_RE.sub("", text, count=1)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


def _cell_md(text: str) -> str:
    return " ".join(text.split()).replace("|", "\\|")


def table_rows(table: TableStructure) -> list[list[str]]:
    """Grid of texts; a spanning cell's text sits in its top-left position only."""
    rows = [[""] * table.num_cols for _ in range(table.num_rows)]
    for cell in table.cells:
        rows[cell.start_row][cell.start_col] = cell.text
    return rows


def _header_rows(table: TableStructure) -> int:
    """Leading rows made only of column-header cells."""
    by_row: dict[int, list] = {}
    for cell in table.cells:
        by_row.setdefault(cell.start_row, []).append(cell)
    n = 0
    for i in range(table.num_rows):
        cells = by_row.get(i, [])
        if not cells or any(c.role is not CellRole.COLUMN_HEADER for c in cells):
            break
        n += 1
    return n


def table_to_markdown(table: TableStructure, warnings: Optional[list[str]] = None) -> str:
    """Pipe table; the first row is the header row.

    Pipe tables have a single header row, so further column-header rows
    are written as body rows and reported in ``warnings``.
    """
    if table.num_rows == 0 or table.num_cols == 0:
        return TABLE_PLACEHOLDER
    extra = _header_rows(table) - 1
    if extra > 0 and warnings is not None:
        warnings.append(f"markdown: {extra} extra header row(s) folded into the table body")
    rows = [[_cell_md(t) for t in row] for row in table_rows(table)]
    lines = ["| " + " | ".join(rows[0]) + " |", "| " + " | ".join(["---"] * table.num_cols) + " |"]
    lines += ["| " + " | ".join(row) + " |" for row in rows[1:]]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Markdown
# ---------------------------------------------------------------------------


def _escape_block_start(text: str) -> str:
    return "\\" + text if _BLOCK_START_RE.match(text) else text


def _fence(text: str, info: str = "") -> str:
    ticks = "```"
    while ticks in text:
        ticks += "`"
    return f"{ticks}{info}\n{text}\n{ticks}"


class _MarkdownWriter:
    def __init__(self, doc: DoclingDocument, opts: ExportOptions, warnings: Optional[list[str]] = None) -> None:
        self.doc = doc
        self.opts = opts
        self.warnings = warnings

    def blocks(self, refs: list[NodeRef]) -> list[str]:
        out: list[str] = []
        for ref in refs:
            out.extend(self.item(ref))
        return out

    def _caption(self, ref: Optional[NodeRef]) -> list[str]:
        if ref is None:
            return []
        text = self.doc.resolve(ref).text
        return [f"*{text}*"] if text else []

    def item(self, ref: NodeRef) -> list[str]:
        item = self.doc.resolve(ref)
        if isinstance(item, GroupItem):
            if item.label is ItemLabel.LIST:
                return [self.list(item, 0)]
            inner = self.blocks(item.children)
            if item.name == "blockquote":
                return ["\n".join(f"> {line}" if line else ">" for line in "\n\n".join(inner).split("\n"))]
            return inner
        if isinstance(item, TableItem):
            return [table_to_markdown(item.data, self.warnings)] + self._caption(item.caption)
        if isinstance(item, PictureItem):
            return [self.opts.image_placeholder] + self._caption(item.caption)
        return self.text(item)

    def text(self, item: TextItem) -> list[str]:
        label, text = item.label, item.text
        if label in (ItemLabel.CODE, ItemLabel.FORMULA):
            return [_fence(text, "math" if label is ItemLabel.FORMULA else "")]
        if not text:
            return []
        if label is ItemLabel.TITLE:
            return [f"# {text}"]
        if label is ItemLabel.SECTION_HEADER:
            return [f"{'#' * min(item.level or 1, 6)} {text}"]
        if label is ItemLabel.CAPTION:
            return [f"*{text}*"]
        if label is ItemLabel.LIST_ITEM:
            return [f"- {strip_list_marker(text)}"]
        return [_escape_block_start(text)]

    def list(self, group: GroupItem, depth: int) -> str:
        ordered = group.name == "ordered-list"
        pad = "  " * depth
        lines: list[str] = []
        n = 0
        for ref in group.children:
            child = self.doc.resolve(ref)
            if isinstance(child, GroupItem) and child.label is ItemLabel.LIST:
                lines.append(self.list(child, depth + 1))
            elif isinstance(child, TextItem) and child.label is ItemLabel.LIST_ITEM:
                n += 1
                marker = f"{n}." if ordered else "-"
                lines.append(f"{pad}{marker} {strip_list_marker(child.text)}".rstrip())
            else:
                for block in self.item(ref):
                    lines.extend(f"{pad}  {line}" if line else "" for line in block.split("\n"))
        return "\n".join(lines)


def export_markdown(doc: DoclingDocument, opts: Optional[ExportOptions] = None,
                    include_furniture: Optional[bool] = None, warnings: Optional[list[str]] = None) -> str:
    opts = opts or ExportOptions()
    if include_furniture is not None:
        opts = ExportOptions(include_furniture, opts.image_placeholder)
    writer = _MarkdownWriter(doc, opts, warnings)
    blocks = []
    if opts.include_furniture:
        blocks += [doc.resolve(r).text for r in doc.furniture if doc.resolve(r).text]
    blocks += writer.blocks(doc.body)
    return "\n\n".join(b for b in blocks if b)


# ---------------------------------------------------------------------------
# HTML
# ---------------------------------------------------------------------------


def _esc(text: str) -> str:
    return html.escape(text, quote=False)


def table_to_html(table: TableStructure, caption: str = "") -> list[str]:
    lines = ["<table>"]
    if caption:
        lines.append(f"<caption>{_esc(caption)}</caption>")
    by_row: dict[int, list] = {}
    for cell in sorted(table.cells, key=lambda c: (c.start_row, c.start_col)):
        by_row.setdefault(cell.start_row, []).append(cell)
    head_rows = _header_rows(table)
    for i in range(table.num_rows):
        if i == 0 and head_rows:
            lines.append("<thead>")
        if i == head_rows:
            lines.append("<tbody>")
        parts = []
        for c in by_row.get(i, []):
            tag = "td" if c.role is CellRole.BODY else "th"
            attrs = ""
            if c.row_span > 1:
                attrs += f' rowspan="{c.row_span}"'
            if c.col_span > 1:
                attrs += f' colspan="{c.col_span}"'
            parts.append(f"<{tag}{attrs}>{_esc(c.text)}</{tag}>")
        lines.append("<tr>" + "".join(parts) + "</tr>")
        if i == head_rows - 1:
            lines.append("</thead>")
    if table.num_rows > head_rows:
        lines.append("</tbody>")
    lines.append("</table>")
    return lines


class _HtmlWriter:
    def __init__(self, doc: DoclingDocument, opts: ExportOptions) -> None:
        self.doc = doc
        self.opts = opts

    def _caption_text(self, ref: Optional[NodeRef]) -> str:
        return self.doc.resolve(ref).text if ref is not None else ""

    def blocks(self, refs: list[NodeRef]) -> list[str]:
        out: list[str] = []
        for ref in refs:
            out.extend(self.item(ref))
        return out

    def item(self, ref: NodeRef) -> list[str]:
        item = self.doc.resolve(ref)
        if isinstance(item, GroupItem):
            if item.label is ItemLabel.LIST:
                return self.list(item)
            inner = self.blocks(item.children)
            if item.name == "blockquote":
                return ["<blockquote>"] + inner + ["</blockquote>"]
            return inner
        if isinstance(item, TableItem):
            return table_to_html(item.data, self._caption_text(item.caption))
        if isinstance(item, PictureItem):
            cap = self._caption_text(item.caption)
            inner = [f"<figcaption>{_esc(cap)}</figcaption>"] if cap else []
            return ["<figure>"] + inner + ["</figure>"]
        return self.text(item)

    def text(self, item: TextItem) -> list[str]:
        label, text = item.label, _esc(item.text)
        if label is ItemLabel.CODE:
            return [f"<pre><code>{text}</code></pre>"]
        if label is ItemLabel.FORMULA:
            return [f'<pre><code class="language-math">{text}</code></pre>']
        if not item.text:
            return []
        if label is ItemLabel.TITLE:
            return [f"<h1>{text}</h1>"]
        if label is ItemLabel.SECTION_HEADER:
            k = min(item.level or 1, 6)
            return [f"<h{k}>{text}</h{k}>"]
        if label is ItemLabel.CAPTION:
            return [f'<p class="caption">{text}</p>']
        if label is ItemLabel.LIST_ITEM:
            return [f"<ul><li>{_esc(strip_list_marker(item.text))}</li></ul>"]
        if label in (ItemLabel.PAGE_HEADER, ItemLabel.PAGE_FOOTER):
            tag = "header" if label is ItemLabel.PAGE_HEADER else "footer"
            return [f"<{tag}>{text}</{tag}>"]
        return [f"<p>{text}</p>"]

    def list(self, group: GroupItem) -> list[str]:
        tag = "ol" if group.name == "ordered-list" else "ul"
        lines = [f"<{tag}>"]
        open_li = False
        for ref in group.children:
            child = self.doc.resolve(ref)
            if isinstance(child, TextItem) and child.label is ItemLabel.LIST_ITEM:
                if open_li:
                    lines[-1] += "</li>"
                lines.append(f"<li>{_esc(strip_list_marker(child.text))}")
                open_li = True
            elif isinstance(child, GroupItem) and child.label is ItemLabel.LIST:
                nested = self.list(child)
                if open_li:
                    lines.extend(nested)
                else:
                    lines.append("<li>")
                    lines.extend(nested)
                    open_li = True
            else:
                if open_li:
                    lines[-1] += "</li>"
                    open_li = False
                lines.append("<li>")
                lines.extend(self.item(ref))
                lines[-1] += "</li>"
        if open_li:
            lines[-1] += "</li>"
        lines.append(f"</{tag}>")
        return lines


def export_html(doc: DoclingDocument, opts: Optional[ExportOptions] = None,
                include_furniture: Optional[bool] = None) -> str:
    opts = opts or ExportOptions()
    if include_furniture is not None:
        opts = ExportOptions(include_furniture, opts.image_placeholder)
    writer = _HtmlWriter(doc, opts)
    body: list[str] = []
    if opts.include_furniture:
        body += [line for ref in doc.furniture for line in writer.item(ref)]
    body += writer.blocks(doc.body)
    lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{_esc(doc.name)}</title>",
        "</head>",
        "<body>",
        *body,
        "</body>",
        "</html>",
    ]
    return "\n".join(lines)


def export_json(doc: DoclingDocument) -> str:
    return doc.to_json().decode("utf-8")


EXPORTERS = {"md": export_markdown, "html": export_html, "json": export_json}


def render(doc: DoclingDocument, fmt: str, warnings: Optional[list[str]] = None) -> str:
    """Export text with the file-level contract: LF endings and one trailing newline."""
    if fmt not in EXPORTERS:
        raise ValueError(f"unknown export format {fmt!r}")
    text = export_markdown(doc, warnings=warnings) if fmt == "md" else EXPORTERS[fmt](doc)
    text = text.replace("\r\n", "\n").rstrip("\n")
    return text + "\n" if text else ""


def write_export(doc: DoclingDocument, fmt: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(render(doc, fmt).encode("utf-8"))
    return path
