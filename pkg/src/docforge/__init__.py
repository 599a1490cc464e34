"""docforge: document conversion into a unified document model."""

__version__ = "0.1.0"

from docforge.chunking import Chunk, HierarchicalChunker, IdentityChunker, chunk_hierarchical  # noqa: E402
from docforge.export import export_html, export_markdown, render  # noqa: E402
from docforge.model import DoclingDocument, ItemLabel, NodeRef  # noqa: E402
from docforge.pipeline import ConversionOptions, ConversionResult, ConversionStatus, convert, convert_all  # noqa: E402

__all__ = [
    "Chunk",
    "ConversionOptions",
    "ConversionResult",
    "ConversionStatus",
    "DoclingDocument",
    "HierarchicalChunker",
    "IdentityChunker",
    "ItemLabel",
    "NodeRef",
    "chunk_hierarchical",
    "convert",
    "convert_all",
    "export_html",
    "export_markdown",
    "render",
    "__version__",
]
