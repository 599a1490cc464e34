"""Command-line interface.

Exit codes: 0 when every input converted fully, 2 when any input was only
partially converted, 1 on any failure or usage error.

Settings may also come from ``docforge.toml`` in the working directory (or
``--config PATH``). Top-level keys apply to every subcommand and a table
named after the subcommand overrides them; command-line flags win over both.
Keys are the long flag names with dashes as underscores, for example
``to = "md"``, ``threads = 4`` or ``table_structure = false``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from docforge import __version__
from docforge.bench import BenchOptions, run_benchmark
from docforge.chunking import chunk_hierarchical, to_jsonl
from docforge.errors import DocforgeError
from docforge.export import render
from docforge.markup.source import InputFormat
from docforge.pdf.parser import parse_pdf
from docforge.pipeline import ConversionOptions, ConversionResult, ConversionStatus, DocumentInput
from docforge.pipeline.convert import batch_profile, convert, convert_all
from docforge.pipeline.options import resolve_thread_budget

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

CONFIG_NAME = "docforge.toml"
EXIT_OK, EXIT_FAILURE, EXIT_PARTIAL = 0, 1, 2
FORMATS = {"pdf": InputFormat.PDF, "html": InputFormat.HTML, "md": InputFormat.MARKDOWN}
STDIN = "-"

# defaults applied after the config file and the flags have been merged
DEFAULTS: dict[str, dict[str, Any]] = {
    "convert": {"to": "md", "from": None, "table_structure": True, "layout_sidecar": None,
                "output": None, "profile": None, "threads": None},
    "chunk": {"from": None, "max_chars": None, "table_structure": True, "layout_sidecar": None},
    "dump-cells": {},
    "bench": {"repeat": 1, "threads": 1, "profile": None, "table_structure": True},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means partial success here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAILURE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="docforge", description="Convert documents into a unified document model.")
    parser.add_argument("--version", action="version", version=f"docforge {__version__}")
    parser.add_argument("--config", metavar="PATH", help=f"settings file (default: ./{CONFIG_NAME} if present)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def conversion_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--from", dest="from", choices=sorted(FORMATS), default=None,
                       help="skip format detection")
        p.add_argument("--no-table-structure", dest="table_structure", action="store_const", const=False,
                       default=None, help="leave table items without structure")
        p.add_argument("--layout-sidecar", metavar="PATH", default=None,
                       help="layout predictions file, or a directory of <stem>.json files")

    p = sub.add_parser("convert", help="convert documents to md, html or json")
    p.add_argument("inputs", nargs="+", help="input files; '-' reads standard input")
    p.add_argument("--to", choices=("md", "html", "json"), default=None)
    conversion_flags(p)
    p.add_argument("--output", metavar="DIR", default=None,
                   help="write <stem>.<ext> files here; needed for more than one input")
    p.add_argument("--profile", metavar="PATH", default=None, help="write a timing report as JSON")
    p.add_argument("--threads", type=int, default=None, help="thread budget")

    p = sub.add_parser("chunk", help="emit hierarchical chunks as JSON Lines")
    p.add_argument("input", help="input file; '-' reads standard input")
    p.add_argument("--max-chars", dest="max_chars", type=int, default=None,
                   help="soft-split long text items at paragraph or sentence ends")
    conversion_flags(p)

    p = sub.add_parser("dump-cells", help="emit the text cells of a PDF as JSON Lines")
    p.add_argument("input", help="PDF file; '-' reads standard input")

    p = sub.add_parser("bench", help="time every page and stage over a corpus directory")
    p.add_argument("corpus", help="directory of documents")
    p.add_argument("--repeat", type=int, default=None, help="passes; the first is a warm-up when > 1")
    p.add_argument("--threads", type=int, default=None, help="convert documents concurrently")
    p.add_argument("--profile", metavar="PATH", default=None, help="write the report as JSON")
    p.add_argument("--no-table-structure", dest="table_structure", action="store_const", const=False,
                   default=None)
    return parser


# ---------------------------------------------------------------------------
# settings
# ---------------------------------------------------------------------------


def load_config(path: Optional[str]) -> dict:
    target = Path(path) if path else Path(CONFIG_NAME)
    if not target.is_file():
        if path:
            raise UsageError(f"config file not found: {path}")
        return {}
    try:
        return tomllib.loads(target.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"{target}: {exc}") from None


def settings(command: str, args: argparse.Namespace, config: dict) -> dict:
    """Defaults, then top-level config keys, then the command's table, then flags."""
    known = DEFAULTS[command]
    merged = dict(known)
    section = config.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config: [{command}] must be a table")
    for layer in ({k: v for k, v in config.items() if not isinstance(v, dict)}, section):
        for key, value in layer.items():
            key = key.replace("-", "_")
            if key in known:
                merged[key] = value
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def conversion_options(s: dict) -> ConversionOptions:
    fmt = s.get("from")
    if fmt is not None and fmt not in FORMATS:
        raise UsageError(f"unknown input format {fmt!r}")
    threads = s.get("threads")
    try:
        return ConversionOptions(
            do_table_structure=bool(s.get("table_structure", True)),
            sidecar_path=Path(s["layout_sidecar"]) if s.get("layout_sidecar") else None,
            thread_budget=resolve_thread_budget(threads),
            force_format=FORMATS[fmt] if fmt else None,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _source(arg: str):
    if arg == STDIN:
        return DocumentInput("stdin", sys.stdin.buffer.read())
    return Path(arg)


def _write_stdout(text: str) -> None:
    data = text.encode("utf-8")
    buffer = getattr(sys.stdout, "buffer", None)
    if buffer is not None:
        sys.stdout.flush()
        buffer.write(data)
        buffer.flush()
    else:
        sys.stdout.write(text)


def _report(result: ConversionResult) -> None:
    name = result.input.name or "<input>"
    for w in result.warnings:
        print(f"{name}: warning: {w}", file=sys.stderr)
    for e in result.errors:
        print(f"{name}: error: {e}", file=sys.stderr)


def exit_code(statuses: Sequence[ConversionStatus]) -> int:
    if any(s is ConversionStatus.FAILURE for s in statuses):
        return EXIT_FAILURE
    if any(s is ConversionStatus.PARTIAL_SUCCESS for s in statuses):
        return EXIT_PARTIAL
    return EXIT_OK


def _output_names(results: list[ConversionResult], ext: str) -> list[str]:
    """<stem>.<ext> per result; repeated stems get -2, -3 ... in input order."""
    seen: dict[str, int] = {}
    names = []
    for res in results:
        stem = Path(res.input.name).stem or "output"
        seen[stem] = seen.get(stem, 0) + 1
        names.append(f"{stem}.{ext}" if seen[stem] == 1 else f"{stem}-{seen[stem]}.{ext}")
    return names


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_convert(args: argparse.Namespace, config: dict) -> int:
    s = settings("convert", args, config)
    if s["to"] not in ("md", "html", "json"):
        raise UsageError(f"unknown output format {s['to']!r}")
    options = conversion_options(s)
    if len(args.inputs) > 1 and not s["output"]:
        raise UsageError("several inputs need --output DIR")
    if args.inputs.count(STDIN) > 1:
        raise UsageError("standard input can be read only once")

    sources = [_source(a) for a in args.inputs]
    start = time.perf_counter_ns()
    results = convert_all(sources, options)
    batch_ns = time.perf_counter_ns() - start

    out_dir = Path(s["output"]) if s["output"] else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for res, name in zip(results, _output_names(results, s["to"])):
        _report(res)
        if res.document is None:
            continue
        export_warnings: list[str] = []
        text = render(res.document, s["to"], export_warnings)
        for w in export_warnings:
            print(f"{res.input.name or '<input>'}: warning: {w}", file=sys.stderr)
        if out_dir is None:
            _write_stdout(text)
        else:
            (out_dir / name).write_bytes(text.encode("utf-8"))

    if s["profile"]:
        report = batch_profile(results, options, batch_ns)
        Path(s["profile"]).write_text(report.to_json(), encoding="utf-8")
    return exit_code([r.status for r in results])


def cmd_chunk(args: argparse.Namespace, config: dict) -> int:
    s = settings("chunk", args, config)
    options = conversion_options(s)
    max_chars = s["max_chars"]
    if max_chars is not None and max_chars < 1:
        raise UsageError("--max-chars must be positive")
    result = convert(_source(args.input), options)
    _report(result)
    if result.document is not None:
        _write_stdout(to_jsonl(chunk_hierarchical(result.document, max_chars)))
    return exit_code([result.status])


def cmd_dump_cells(args: argparse.Namespace, config: dict) -> int:
    source = _source(args.input)
    name = args.input if args.input != STDIN else "stdin"
    try:
        data = source.data if isinstance(source, DocumentInput) else source.read_bytes()
    except OSError as exc:
        print(f"{name}: error: cannot read: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        parsed = parse_pdf(data)
    except DocforgeError as exc:
        print(f"{name}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for w in parsed.warnings:
        print(f"{name}: warning: {w}", file=sys.stderr)
    lines = [json.dumps(cell.to_record(page.page_no), ensure_ascii=False)
             for page in parsed.pages for cell in page.cells]
    _write_stdout("".join(line + "\n" for line in lines))
    return EXIT_PARTIAL if parsed.failed_pages else EXIT_OK


def cmd_bench(args: argparse.Namespace, config: dict) -> int:
    s = settings("bench", args, config)
    try:
        options = BenchOptions(repeat=int(s["repeat"]), threads=int(s["threads"]),
                               do_table_structure=bool(s["table_structure"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        result = run_benchmark(args.corpus, options)
    except DocforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write_stdout(result.table() + "\n")
    if s["profile"]:
        Path(s["profile"]).write_text(result.report.to_json(), encoding="utf-8")
    for name, status in result.statuses.items():
        if status is not ConversionStatus.SUCCESS:
            print(f"{name}: {status.value}", file=sys.stderr)
    return exit_code(list(result.statuses.values()))


COMMANDS = {"convert": cmd_convert, "chunk": cmd_chunk, "dump-cells": cmd_dump_cells, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"docforge: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
