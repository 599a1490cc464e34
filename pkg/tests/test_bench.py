import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docforge import bench
from docforge.bench import BenchOptions, bench_inputs, run_benchmark
from docforge.errors import EmptyCorpus
from docforge.model import new_document
from docforge.pipeline.base import ConversionResult, ConversionStatus
from docforge.profile import (
    NS,
    STAGES,
    DocumentTiming,
    PageTiming,
    ProfileReport,
    format_breakdown,
    load_report,
    nearest_rank,
    stage_breakdown,
)
from docforge.synth.typeset import random_layout_document, synthetic_corpus


def page(page_no, table_ns=0, other_ns=1000, overhead=0):
    stages = {s: other_ns for s in STAGES}
    stages["table_structure"] = table_ns
    applied = {s for s in STAGES if s != "table_structure"} | ({"table_structure"} if table_ns else set())
    return PageTiming(page_no, stages, applied, overhead)


def row(report, stage):
    return next(r for r in stage_breakdown(report) if r.stage == stage)


# -- percentiles ---------------------------------------------------------------------


def test_p95_of_one_to_hundred():
    values = list(range(1, 101))
    assert nearest_rank(values, 95) == 95
    assert nearest_rank(values, 5) == 5
    assert nearest_rank(values, 50) == 50


@pytest.mark.parametrize("values,pct,expected", [
    ([7], 5, 7),
    ([7], 95, 7),
    ([3, 1, 2], 50, 2),
    ([10, 20, 30, 40], 50, 20),
    ([10, 20, 30, 40], 95, 40),
    ([10, 20, 30, 40], 5, 10),
    (list(range(1, 21)), 95, 19),
])
def test_nearest_rank_examples(values, pct, expected):
    assert nearest_rank(values, pct) == expected


def test_percentile_of_empty_sample():
    with pytest.raises(ValueError):
        nearest_rank([], 50)


@given(st.lists(st.integers(0, 10**9), min_size=1, max_size=200), st.sampled_from([5, 50, 95]))
def test_nearest_rank_is_a_sample_member_with_enough_mass_below(values, pct):
    v = nearest_rank(values, pct)
    assert v in values
    n = len(values)
    assert sum(1 for x in values if x <= v) * 100 >= pct * n
    assert sum(1 for x in values if x < v) * 100 < pct * n


# -- stage breakdown -----------------------------------------------------------------


def test_table_stage_on_28_of_100_pages():
    pages = [page(i + 1, table_ns=100_000_000 if i < 28 else 0) for i in range(100)]
    report = ProfileReport.build([DocumentTiming("d", pages)])
    r = row(report, "table_structure")
    assert r.applied_pages == 28 and r.total_pages == 100
    assert r.applied_mean == Fraction(NS, 10)
    assert r.all_pages_mean == Fraction(28 * NS, 1000)
    assert r.all_pages_mean == r.applied_mean * r.applied_fraction
    stage = report.to_dict()["per_stage"]["table_structure"]
    assert stage["total_seconds"] == pytest.approx(2.8)
    assert stage["mean_seconds_per_applied_page"] == pytest.approx(0.1)
    assert stage["mean_seconds_per_page"] == pytest.approx(0.028)


def test_stage_never_applied():
    report = ProfileReport.build([DocumentTiming("d", [page(1), page(2)])])
    r = row(report, "table_structure")
    assert r.applied_pages == 0 and r.all_pages_mean == 0 and r.applied_mean == 0


def test_single_page_views_agree():
    report = ProfileReport.build([DocumentTiming("d", [page(1, table_ns=5)])])
    for r in stage_breakdown(report):
        assert r.applied_mean == r.all_pages_mean


@given(st.lists(st.lists(st.tuples(st.integers(0, 10**8), st.integers(0, 10**8)), min_size=1, max_size=6),
                min_size=1, max_size=6))
def test_views_consistent_exactly(docs):
    timings = [DocumentTiming(f"d{i}", [page(j + 1, t, o) for j, (t, o) in enumerate(pages)])
               for i, pages in enumerate(docs)]
    report = ProfileReport.build(timings)
    for r in stage_breakdown(report):
        assert r.all_pages_mean == r.applied_mean * r.applied_fraction
    assert len(report.to_dict()["per_page"]) == sum(len(p) for p in docs)


def test_stage_totals_within_page_totals():
    pages = [page(1, 10, 20, overhead=7), page(2, 0, 30, overhead=0)]
    report = ProfileReport.build([DocumentTiming("d", pages)])
    data = report.to_dict()
    assert sum(s["total_ns"] for s in data["per_stage"].values()) <= sum(p["total_ns"] for p in data["per_page"])


def test_human_table_lists_every_stage():
    report = ProfileReport.build([DocumentTiming("d", [page(1, 5)])])
    text = format_breakdown(report)
    for stage in STAGES:
        assert stage in text
    assert "p95=" in text


# -- harness -------------------------------------------------------------------------


def test_two_documents_three_pages():
    one, _ = random_layout_document(1, pages=1)
    two, _ = random_layout_document(2, pages=2)
    result = bench_inputs({"a.pdf": one, "b.pdf": two})
    data = result.report.to_dict()
    assert len(data["per_page"]) == 3
    assert [(p["doc"], p["page_no"]) for p in data["per_page"]] == [("a.pdf", 1), ("b.pdf", 1), ("b.pdf", 2)]
    assert [d["pages"] for d in data["per_document"]] == [1, 2]
    assert set(data["percentiles"]) == {"p05", "p50", "p95"}
    assert all(v >= 0 for p in data["per_page"] for v in p["stages_ns"].values())


def test_warm_up_pass_is_discarded(monkeypatch):
    calls = []

    def fake_convert(src, options):
        calls.append(src.name)
        n = len(calls)
        stages = {s: n * 1000 for s in STAGES}
        timing = DocumentTiming(src.name, [PageTiming(1, stages, set(STAGES))])
        return ConversionResult(src, ConversionStatus.SUCCESS, new_document(src.name), timing=timing)

    monkeypatch.setattr(bench, "convert", fake_convert)
    result = bench_inputs({"x.pdf": b""}, BenchOptions(repeat=3))
    assert len(calls) == 3
    # passes 2 and 3 charged 2000 and 3000 ns per stage; the mean is kept
    (only,) = result.report.documents[0].pages
    assert only.stages == {s: 2500 for s in STAGES}
    assert result.report.repeat == 3


def test_single_pass_is_kept(monkeypatch):
    seen = []
    real = bench.convert
    monkeypatch.setattr(bench, "convert", lambda s, o: seen.append(s) or real(s, o))
    bench_inputs({"a.md": b"# a\n"})
    assert len(seen) == 1


def test_corpus_directory(tmp_path):
    corpus = synthetic_corpus(3, seed=5)
    for name, data in corpus.files.items():
        (tmp_path / name).write_bytes(data)
    (tmp_path / "notes.txt").write_text("ignored")
    result = run_benchmark(tmp_path)
    assert [d.name for d in result.report.documents] == sorted(corpus.files)
    assert set(result.statuses.values()) == {ConversionStatus.SUCCESS}
    assert load_report(json.loads(result.report.to_json())) is not None


def test_empty_corpus(tmp_path):
    with pytest.raises(EmptyCorpus):
        run_benchmark(tmp_path)
    with pytest.raises(EmptyCorpus):
        run_benchmark(tmp_path / "missing")
    with pytest.raises(EmptyCorpus):
        bench_inputs({})


@pytest.mark.parametrize("kw", [{"repeat": 0}, {"threads": 0}])
def test_bad_options(kw):
    with pytest.raises(ValueError):
        BenchOptions(**kw)


def test_report_structure_is_deterministic():
    files = synthetic_corpus(4, seed=11).files
    a, b = (bench_inputs(files).report.to_dict() for _ in range(2))
    assert [(p["doc"], p["page_no"]) for p in a["per_page"]] == [(p["doc"], p["page_no"]) for p in b["per_page"]]
    assert a["per_document"][0]["name"] == b["per_document"][0]["name"]
    assert {s: v["applied_pages"] for s, v in a["per_stage"].items()} == \
        {s: v["applied_pages"] for s, v in b["per_stage"].items()}


def test_threads_mark_report_concurrent():
    files = synthetic_corpus(3, seed=2).files
    result = bench_inputs(files, BenchOptions(threads=2))
    env = result.report.to_dict()["environment"]
    assert env["concurrent"] is True and env["thread_budget"] == 2
    assert bench_inputs(files).report.to_dict()["environment"]["concurrent"] is False


def test_no_table_structure_zeroes_stage():
    files = synthetic_corpus(3, seed=3).files
    on = bench_inputs(files).report.stage_stats()["table_structure"]
    off = bench_inputs(files, BenchOptions(do_table_structure=False)).report.stage_stats()["table_structure"]
    assert on.applied_pages > 0 and on.total_ns > 0
    assert off.applied_pages == 0 and off.total_ns == 0
