"""Write the synthetic benchmark corpus: ``python -m docforge.synth OUTDIR``."""

import argparse
import sys
from pathlib import Path

from docforge.synth.typeset import synthetic_corpus


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m docforge.synth")
    parser.add_argument("outdir")
    parser.add_argument("--docs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--min-pages", type=int, default=1)
    parser.add_argument("--max-pages", type=int, default=3)
    parser.add_argument("--no-tables", action="store_true")
    args = parser.parse_args(argv)
    if not 1 <= args.min_pages <= args.max_pages:
        parser.error("need 1 <= --min-pages <= --max-pages")
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = synthetic_corpus(args.docs, args.seed, (args.min_pages, args.max_pages), not args.no_tables)
    for name, data in corpus.files.items():
        (out / name).write_bytes(data)
    print(f"wrote {len(corpus.files)} documents to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
