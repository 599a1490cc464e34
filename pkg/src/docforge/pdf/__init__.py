"""PDF backend: object graph decoding, fonts and text-cell extraction."""

from docforge.pdf.content import extract_cells
from docforge.pdf.fonts import PdfFont, decode_text
from docforge.pdf.parser import PdfDocument, parse_pdf
from docforge.pdf.types import ParsedPage, ParsedPdf, TextCell
from docforge.pdf.xref import ObjectGraph, decode_object_graph

__all__ = [
    "ObjectGraph",
    "ParsedPage",
    "ParsedPdf",
    "PdfDocument",
    "PdfFont",
    "TextCell",
    "decode_object_graph",
    "decode_text",
    "extract_cells",
    "parse_pdf",
]
