"""Backends that build documents directly from markup."""

from docforge.markup.html import parse_html, recovery_events
from docforge.markup.markdown import flatten_inline, parse_markdown
from docforge.markup.source import InputFormat, MarkupSource, detect_format

__all__ = [
    "InputFormat",
    "MarkupSource",
    "detect_format",
    "flatten_inline",
    "parse_html",
    "parse_markdown",
    "recovery_events",
]
