"""Pipeline contract, the two shipped pipelines and their registry."""

from __future__ import annotations

import abc
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from docforge.errors import DocforgeError, UndecodableInput
from docforge.layout import LayoutSource, Sidecar, postprocess_clusters, predict_layout_heuristic
from docforge.markup.html import parse_html
from docforge.markup.markdown import parse_markdown
from docforge.markup.source import MIMETYPES, InputFormat, MarkupSource
from docforge.model import DoclingDocument, DocumentOrigin, ItemLabel
from docforge.pdf.parser import PdfDocument
from docforge.pipeline.assembly import PageResult, assemble
from docforge.pipeline.options import ConversionOptions
from docforge.profile import DocumentTiming, PageTiming, ProfileReport, StageTimer
from docforge.tables import recognize_table


class ConversionStatus(str, Enum):
    SUCCESS = "success"
    PARTIAL_SUCCESS = "partial_success"
    FAILURE = "failure"


@dataclass
class DocumentInput:
    name: str
    data: bytes
    format: InputFormat = InputFormat.UNKNOWN


@dataclass
class ConversionResult:
    input: DocumentInput
    status: ConversionStatus
    document: Optional[DoclingDocument] = None
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    timing: DocumentTiming = field(default_factory=lambda: DocumentTiming(""))
    thread_budget: int = 1

    def __post_init__(self) -> None:
        if self.status is ConversionStatus.FAILURE and not self.errors:
            raise ValueError("a failed conversion must record an error")
        if self.status is not ConversionStatus.FAILURE and self.document is None:
            raise ValueError("a successful conversion must carry a document")

    @property
    def profile(self) -> ProfileReport:
        return ProfileReport.build([self.timing], self.thread_budget)

    @classmethod
    def failure(cls, source: DocumentInput, message: str, warnings: Optional[list[str]] = None,
                timing: Optional[DocumentTiming] = None) -> ConversionResult:
        return cls(source, ConversionStatus.FAILURE, None, list(warnings or []), [message],
                   timing or DocumentTiming(source.name))


class BasePipeline(abc.ABC):
    """Turns one input into a ConversionResult; never raises for bad input."""

    def __init__(self, options: ConversionOptions, page_threads: Optional[int] = None) -> None:
        self.options = options
        # worker threads for pages within one document; defaults to the budget
        self.page_threads = page_threads if page_threads is not None else options.thread_budget

    @abc.abstractmethod
    def execute(self, source: DocumentInput) -> ConversionResult:
        ...


# ---------------------------------------------------------------------------
# markup
# ---------------------------------------------------------------------------


class SimplePipeline(BasePipeline):
    """Markup backends build the document directly; there is one pseudo-page."""

    def execute(self, source: DocumentInput) -> ConversionResult:
        timer = StageTimer()
        warnings: list[str] = []
        start = time.perf_counter_ns()
        try:
            with timer.time("backend_parse"):
                markup = MarkupSource(source.format, source.data, source.name)
                parse = parse_html if source.format is InputFormat.HTML else parse_markdown
                doc = parse(markup, warnings)
        except UndecodableInput as exc:
            timing = DocumentTiming(source.name, [PageTiming.from_timer(1, timer)])
            return ConversionResult.failure(source, str(exc), warnings, timing)
        wall = time.perf_counter_ns() - start
        timing = DocumentTiming(source.name, [PageTiming.from_timer(1, timer, wall)], wall)
        return ConversionResult(source, ConversionStatus.SUCCESS, doc, warnings, [], timing,
                                self.options.thread_budget)


# ---------------------------------------------------------------------------
# PDF
# ---------------------------------------------------------------------------


def _split_evenly(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


class StandardPdfPipeline(BasePipeline):
    """Parse, layout, table structure per page; then single-threaded assembly."""

    def execute(self, source: DocumentInput) -> ConversionResult:
        start = time.perf_counter_ns()
        try:
            pdf = PdfDocument(source.data, self.options.split_gap)
            sidecar = self._sidecar(source)
        except DocforgeError as exc:
            return ConversionResult.failure(source, f"{type(exc).__name__}: {exc}")
        open_ns = time.perf_counter_ns() - start

        results = self.run_pages(pdf, sidecar)
        # opening the file (xref, object graph) is backend work shared by all pages
        for res, share in zip(results, _split_evenly(open_ns, max(1, len(results)))):
            res.timer.add("backend_parse", share)
            res.wall_ns += share

        origin = DocumentOrigin.from_bytes(source.data, source.name, MIMETYPES[InputFormat.PDF])
        stem = source.name.rsplit("/", 1)[-1].rsplit(".", 1)[0] if source.name else ""
        asm_before = [r.timer.ns["assembly"] for r in results]
        doc = assemble(results, stem, origin)
        for res, before in zip(results, asm_before):
            res.wall_ns += res.timer.ns["assembly"] - before

        warnings = list(pdf.warnings)
        for res in results:
            warnings.extend(res.warnings)
        for w in pdf.font_warnings():
            if w not in warnings:
                warnings.append(w)
        failed = [r.page_no for r in results if r.failed]
        timing = DocumentTiming(
            source.name,
            [PageTiming.from_timer(r.page_no, r.timer, r.wall_ns) for r in results],
            time.perf_counter_ns() - start,
        )
        if results and len(failed) == len(results):
            return ConversionResult(source, ConversionStatus.FAILURE, None, warnings,
                                    [f"all {len(results)} page(s) failed"], timing, self.options.thread_budget)
        status = ConversionStatus.PARTIAL_SUCCESS if failed else ConversionStatus.SUCCESS
        return ConversionResult(source, status, doc, warnings, [], timing, self.options.thread_budget)

    def _sidecar(self, source: DocumentInput) -> Optional[Sidecar]:
        path = self.options.sidecar_for(source.name or "input")
        return Sidecar.load(path) if path is not None else None

    def run_pages(self, pdf: PdfDocument, sidecar: Optional[Sidecar] = None) -> list[PageResult]:
        """Process every page; output is in page order whatever the execution order."""
        pages = range(1, pdf.page_count + 1)
        threads = self.page_threads
        if threads > 1 and len(pages) > 1:
            with ThreadPoolExecutor(max_workers=min(threads, len(pages))) as pool:
                results = list(pool.map(lambda n: self.process_page(pdf, n, sidecar), pages))
        else:
            results = [self.process_page(pdf, n, sidecar) for n in pages]
        return sorted(results, key=lambda r: r.page_no)

    def process_page(self, pdf: PdfDocument, page_no: int, sidecar: Optional[Sidecar] = None) -> PageResult:
        res = PageResult(page_no)
        timer = res.timer
        start = time.perf_counter_ns()
        stage = "backend_parse"
        try:
            with timer.time("backend_parse"):
                page, warnings = pdf.parse_page(page_no)
            res.page = page
            res.warnings.extend(warnings)

            stage = "layout"
            with timer.time("layout"):
                if sidecar is not None and self.options.layout_source is LayoutSource.SIDECAR:
                    prediction = sidecar.prediction(page_no, (page.width, page.height))
                else:
                    prediction = predict_layout_heuristic(page)
                res.clusters = postprocess_clusters(prediction, page)

            stage = "table_structure"
            table_clusters = [c for c in res.clusters if c.label is ItemLabel.TABLE]
            if self.options.do_table_structure and table_clusters:
                with timer.time("table_structure"):
                    for cl in table_clusters:
                        res.tables[cl.id] = recognize_table(cl, page.cells, res.warnings)
        except Exception as exc:  # a bad page must not sink the document
            res.error = f"{type(exc).__name__}: {exc}"
            res.clusters = []
            res.tables = {}
            res.warnings.append(f"page {page_no}: {stage} failed, page omitted ({res.error})")
        res.warnings = [w if w.startswith("page ") else f"page {page_no}: {w}" for w in res.warnings]
        res.wall_ns = time.perf_counter_ns() - start
        return res


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

PIPELINES: dict[str, type[BasePipeline]] = {
    "standard-pdf": StandardPdfPipeline,
    "simple": SimplePipeline,
}

FORMAT_PIPELINES: dict[InputFormat, str] = {
    InputFormat.PDF: "standard-pdf",
    InputFormat.HTML: "simple",
    InputFormat.MARKDOWN: "simple",
}


def register_pipeline(name: str, cls: type[BasePipeline], formats: tuple[InputFormat, ...] = ()) -> None:
    if not issubclass(cls, BasePipeline):
        raise TypeError(f"{cls!r} does not implement BasePipeline")
    PIPELINES[name] = cls
    for fmt in formats:
        FORMAT_PIPELINES[fmt] = name


def pipeline_for(fmt: InputFormat, options: ConversionOptions,
                 page_threads: Optional[int] = None) -> Optional[BasePipeline]:
    name = FORMAT_PIPELINES.get(fmt)
    return PIPELINES[name](options, page_threads) if name else None
