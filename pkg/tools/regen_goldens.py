"""Rewrite tests/golden from the cases in tests/golden_cases.py.

Run after an intended export change, then review the diff:

    python3 tools/regen_goldens.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from golden_cases import CASES, FORMATS, GOLDEN_DIR, golden_path  # noqa: E402

from docforge.export import render  # noqa: E402


def main() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, build in CASES.items():
        doc = build()
        for fmt in FORMATS:
            golden_path(name, fmt).write_bytes(render(doc, fmt).encode("utf-8"))
    print(f"wrote {len(CASES) * len(FORMATS)} files to {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
