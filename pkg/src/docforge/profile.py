"""Timing records and the profile report.

Durations are kept as integer nanoseconds from ``time.perf_counter_ns``
so that sums and the two stage-breakdown views can be checked with exact
arithmetic. Seconds appear only in the serialized report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Iterable, Optional

from docforge import __version__

STAGES = ("backend_parse", "layout", "table_structure", "assembly")
PERCENTILES = (5, 50, 95)
NS = 1_000_000_000


class StageTimer:
    """Accumulates stage durations for one page; each worker owns its own."""

    def __init__(self) -> None:
        self.ns: dict[str, int] = {s: 0 for s in STAGES}
        self.applied: set[str] = set()

    def add(self, stage: str, ns: int, applied: bool = True) -> None:
        self.ns[stage] += max(0, ns)
        if applied:
            self.applied.add(stage)

    def time(self, stage: str, applied: bool = True) -> _Span:
        return _Span(self, stage, applied)


class _Span:
    def __init__(self, timer: StageTimer, stage: str, applied: bool) -> None:
        self.timer = timer
        self.stage = stage
        self.applied = applied

    def __enter__(self) -> _Span:
        self.start = time.perf_counter_ns()
        return self

    def __exit__(self, *exc) -> None:
        self.timer.add(self.stage, time.perf_counter_ns() - self.start, self.applied)


@dataclass
class PageTiming:
    page_no: int
    stages: dict[str, int] = field(default_factory=lambda: {s: 0 for s in STAGES})
    applied: set[str] = field(default_factory=set)
    # time spent on the page outside any stage body
    overhead_ns: int = 0

    @property
    def total_ns(self) -> int:
        return sum(self.stages.values()) + self.overhead_ns

    @classmethod
    def from_timer(cls, page_no: int, timer: StageTimer, wall_ns: int = 0) -> PageTiming:
        stages = dict(timer.ns)
        return cls(page_no, stages, set(timer.applied), max(0, wall_ns - sum(stages.values())))


@dataclass
class DocumentTiming:
    name: str
    pages: list[PageTiming] = field(default_factory=list)
    wall_ns: int = 0

    @property
    def total_ns(self) -> int:
        return sum(p.total_ns for p in self.pages)


def nearest_rank(values: list[int], pct: float) -> int:
    """Nearest-rank percentile: the value at rank ceil(pct/100 * n), 1-based."""
    if not values:
        raise ValueError("percentile of an empty sample")
    ordered = sorted(values)
    n = len(ordered)
    rank = math.ceil(Fraction(pct) * n / 100)
    return ordered[min(max(rank, 1), n) - 1]


def _sec(ns) -> float:
    return float(Fraction(ns) / NS)


@dataclass
class StageStats:
    applied_pages: int
    total_ns: int

    def applied_mean(self) -> Fraction:
        return Fraction(self.total_ns, self.applied_pages) if self.applied_pages else Fraction(0)

    def all_pages_mean(self, pages: int) -> Fraction:
        return Fraction(self.total_ns, pages) if pages else Fraction(0)


@dataclass
class ProfileReport:
    documents: list[DocumentTiming] = field(default_factory=list)
    thread_budget: int = 1
    concurrent: bool = False
    timestamp: str = ""
    tool: str = "docforge"
    repeat: int = 1
    batch_wall_ns: int = 0

    @classmethod
    def build(cls, documents: Iterable[DocumentTiming], thread_budget: int = 1, concurrent: bool = False,
              repeat: int = 1, batch_wall_ns: int = 0) -> ProfileReport:
        return cls(
            list(documents), thread_budget, concurrent,
            datetime.now(timezone.utc).isoformat(timespec="seconds"), "docforge", repeat, batch_wall_ns,
        )

    @property
    def page_rows(self) -> list[tuple[str, PageTiming]]:
        return [(d.name, p) for d in self.documents for p in d.pages]

    @property
    def total_pages(self) -> int:
        return sum(len(d.pages) for d in self.documents)

    def stage_stats(self) -> dict[str, StageStats]:
        out = {}
        for stage in STAGES:
            applied = sum(1 for _, p in self.page_rows if stage in p.applied)
            total = sum(p.stages[stage] for _, p in self.page_rows)
            out[stage] = StageStats(applied, total)
        return out

    def percentiles_ns(self) -> dict[str, int]:
        values = [p.total_ns for _, p in self.page_rows]
        if not values:
            return {}
        return {f"p{pct:02d}": nearest_rank(values, pct) for pct in PERCENTILES}

    def to_dict(self) -> dict:
        stats = self.stage_stats()
        pages = self.total_pages
        return {
            "tool": self.tool,
            "per_document": [
                {"name": d.name, "pages": len(d.pages), "total_seconds": _sec(d.total_ns), "total_ns": d.total_ns}
                for d in self.documents
            ],
            "per_page": [
                {
                    "doc": name,
                    "page_no": p.page_no,
                    "seconds": _sec(p.total_ns),
                    "total_ns": p.total_ns,
                    "stages_ns": {s: p.stages[s] for s in STAGES},
                }
                for name, p in self.page_rows
            ],
            "per_stage": {
                s: {
                    "applied_pages": st.applied_pages,
                    "total_seconds": _sec(st.total_ns),
                    "total_ns": st.total_ns,
                    "mean_seconds_per_applied_page": float(st.applied_mean() / NS),
                    "mean_seconds_per_page": float(st.all_pages_mean(pages) / NS),
                }
                for s, st in stats.items()
            },
            "percentiles": {k: _sec(v) for k, v in self.percentiles_ns().items()},
            "environment": {
                "thread_budget": self.thread_budget,
                "timestamp": self.timestamp,
                "tool_version": __version__,
                "concurrent": self.concurrent,
                "repeat": self.repeat,
                "batch_wall_seconds": _sec(self.batch_wall_ns),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass
class BreakdownRow:
    stage: str
    applied_pages: int
    total_pages: int
    applied_mean: Fraction
    all_pages_mean: Fraction

    @property
    def applied_fraction(self) -> Fraction:
        return Fraction(self.applied_pages, self.total_pages) if self.total_pages else Fraction(0)


def stage_breakdown(report: ProfileReport) -> list[BreakdownRow]:
    """Mean stage time per page, over applied pages only and over all pages.

    Pages a stage never ran on contribute zero to the second view, so
    ``all_pages_mean == applied_mean * applied_fraction`` holds exactly.
    """
    pages = report.total_pages
    rows = []
    for stage, st in report.stage_stats().items():
        rows.append(BreakdownRow(stage, st.applied_pages, pages, st.applied_mean(), st.all_pages_mean(pages)))
    return rows


def format_breakdown(report: ProfileReport) -> str:
    lines = [f"{'stage':<16} {'applied':>9} {'mean/applied (ms)':>18} {'mean/page (ms)':>15}"]
    for row in stage_breakdown(report):
        lines.append(
            f"{row.stage:<16} {row.applied_pages:>4}/{row.total_pages:<4} "
            f"{float(row.applied_mean) / 1e6:>18.3f} {float(row.all_pages_mean) / 1e6:>15.3f}"
        )
    pct = report.percentiles_ns()
    if pct:
        lines.append("seconds/page: " + "  ".join(f"{k}={v / NS:.4f}" for k, v in pct.items()))
    return "\n".join(lines)


def load_report(data: dict) -> Optional[dict]:
    """Minimal structural check used by tests and the CLI."""
    required = {"per_document", "per_page", "per_stage", "percentiles", "environment", "tool"}
    return data if required <= set(data) else None
