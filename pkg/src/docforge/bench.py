"""Benchmark harness: convert a corpus, time every page and stage."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from docforge.errors import EmptyCorpus
from docforge.markup.source import EXTENSIONS
from docforge.pipeline.base import ConversionResult, ConversionStatus, DocumentInput
from docforge.pipeline.convert import Source, convert, convert_all
from docforge.pipeline.options import ConversionOptions
from docforge.profile import DocumentTiming, PageTiming, ProfileReport, format_breakdown


@dataclass
class BenchOptions:
    repeat: int = 1
    threads: int = 1
    do_table_structure: bool = True
    extensions: tuple[str, ...] = field(default_factory=lambda: tuple(sorted(EXTENSIONS)))

    def __post_init__(self) -> None:
        if self.repeat < 1:
            raise ValueError("repeat must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class BenchResult:
    report: ProfileReport
    statuses: dict[str, ConversionStatus]

    def table(self) -> str:
        return format_breakdown(self.report)


def corpus_files(corpus_dir: Union[str, Path], extensions: tuple[str, ...]) -> list[Path]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise EmptyCorpus(f"{root} is not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and p.suffix.lower() in extensions)
    if not files:
        raise EmptyCorpus(f"no convertible files in {root}")
    return files


def _merge(passes: list[list[ConversionResult]]) -> list[DocumentTiming]:
    """Per-page timings averaged over the kept passes (integer nanoseconds)."""
    if len(passes) == 1:
        return [r.timing for r in passes[0]]
    out = []
    n = len(passes)
    for per_doc in zip(*passes):
        merged = DocumentTiming(per_doc[0].timing.name, wall_ns=sum(r.timing.wall_ns for r in per_doc) // n)
        for pages in zip(*(r.timing.pages for r in per_doc)):
            base = pages[0]
            merged.pages.append(PageTiming(
                base.page_no,
                {s: sum(p.stages[s] for p in pages) // n for s in base.stages},
                set(base.applied),
                sum(p.overhead_ns for p in pages) // n,
            ))
        out.append(merged)
    return out


def _run(sources: list[Source], options: BenchOptions) -> BenchResult:
    conv = ConversionOptions(do_table_structure=options.do_table_structure, thread_budget=options.threads)
    passes: list[list[ConversionResult]] = []
    batch_ns = 0
    for i in range(options.repeat):
        # file reading happens inside convert and is charged to backend_parse
        start = time.perf_counter_ns()
        if options.threads > 1:
            results = convert_all(sources, conv)
        else:
            results = [convert(src, conv) for src in sources]
        elapsed = time.perf_counter_ns() - start
        if options.repeat > 1 and i == 0:
            continue  # warm-up pass
        passes.append(results)
        batch_ns += elapsed
    report = ProfileReport.build(_merge(passes), options.threads, options.threads > 1, options.repeat,
                                 batch_ns // len(passes))
    return BenchResult(report, {r.input.name: r.status for r in passes[-1]})


def run_benchmark(corpus_dir: Union[str, Path], options: Optional[BenchOptions] = None) -> BenchResult:
    """Convert every corpus file ``repeat`` times; with repeat > 1 the first pass is a warm-up.

    Documents run one after another unless ``threads`` > 1, in which case
    the pipeline's concurrency is used and the report is marked concurrent.
    """
    options = options or BenchOptions()
    return _run(list(corpus_files(corpus_dir, options.extensions)), options)


def bench_inputs(files: dict[str, bytes], options: Optional[BenchOptions] = None) -> BenchResult:
    """Benchmark in-memory documents, in name order."""
    if not files:
        raise EmptyCorpus("no documents given")
    return _run([DocumentInput(name, data) for name, data in sorted(files.items())], options or BenchOptions())
