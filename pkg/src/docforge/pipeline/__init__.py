"""Conversion orchestration: routing, per-page stages and assembly."""

from docforge.pipeline.assembly import PageResult, assemble, cluster_text
from docforge.pipeline.base import (
    PIPELINES,
    BasePipeline,
    ConversionResult,
    ConversionStatus,
    DocumentInput,
    SimplePipeline,
    StandardPdfPipeline,
    pipeline_for,
    register_pipeline,
)
from docforge.pipeline.convert import batch_profile, convert, convert_all, load_input
from docforge.pipeline.options import ConversionOptions, OcrMode, resolve_thread_budget
from docforge.pipeline.reading_order import match_captions, reading_order

__all__ = [
    "PIPELINES",
    "BasePipeline",
    "ConversionOptions",
    "ConversionResult",
    "ConversionStatus",
    "DocumentInput",
    "OcrMode",
    "PageResult",
    "SimplePipeline",
    "StandardPdfPipeline",
    "assemble",
    "batch_profile",
    "cluster_text",
    "convert",
    "convert_all",
    "load_input",
    "match_captions",
    "pipeline_for",
    "reading_order",
    "register_pipeline",
    "resolve_thread_budget",
]
