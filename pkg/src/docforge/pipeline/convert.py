"""Entry points: route inputs to pipelines, one document or many."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Union

from docforge.markup.source import InputFormat, detect_format
from docforge.pipeline.base import ConversionResult, DocumentInput, pipeline_for
from docforge.pipeline.options import ConversionOptions
from docforge.profile import ProfileReport

Source = Union[str, Path, DocumentInput]


def load_input(source: Source) -> DocumentInput:
    if isinstance(source, DocumentInput):
        return source
    path = Path(source)
    return DocumentInput(path.name, path.read_bytes())


def convert(source: Source, options: Optional[ConversionOptions] = None,
            page_threads: Optional[int] = None) -> ConversionResult:
    """Convert one input. Unreadable or unsupported inputs give a Failure result."""
    options = options or ConversionOptions()
    start = time.perf_counter_ns()
    try:
        doc_input = load_input(source)
    except OSError as exc:
        name = str(source)
        return ConversionResult.failure(DocumentInput(name, b""), f"cannot read {name}: {exc.strerror or exc}")
    read_ns = time.perf_counter_ns() - start

    fmt = options.force_format or doc_input.format
    if fmt is InputFormat.UNKNOWN:
        fmt = detect_format(doc_input.data, doc_input.name)
    doc_input = DocumentInput(doc_input.name, doc_input.data, fmt)
    pipeline = pipeline_for(fmt, options, page_threads)
    if pipeline is None:
        return ConversionResult.failure(doc_input, f"unsupported format: {doc_input.name or '<input>'}")
    result = pipeline.execute(doc_input)
    # reading the file is backend work; charge it to the first page
    if result.timing.pages and read_ns:
        first = result.timing.pages[0]
        first.stages["backend_parse"] += read_ns
        first.applied.add("backend_parse")
    return result


def convert_all(sources: Iterable[Source], options: Optional[ConversionOptions] = None) -> list[ConversionResult]:
    """Convert many inputs, up to ``thread_budget`` at once; results keep input order.

    With several documents the budget is spent across documents and each
    document processes its pages serially, so the total number of worker
    threads never exceeds the budget.
    """
    options = options or ConversionOptions()
    sources = list(sources)
    budget = options.thread_budget
    if budget <= 1 or len(sources) <= 1:
        return [convert(s, options) for s in sources]
    with ThreadPoolExecutor(max_workers=min(budget, len(sources))) as pool:
        return list(pool.map(lambda s: convert(s, options, page_threads=1), sources))


def batch_profile(results: list[ConversionResult], options: ConversionOptions,
                  batch_wall_ns: int = 0) -> ProfileReport:
    concurrent = options.thread_budget > 1
    return ProfileReport.build([r.timing for r in results], options.thread_budget, concurrent,
                               batch_wall_ns=batch_wall_ns)
