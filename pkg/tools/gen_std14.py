"""Regenerate src/docforge/pdf/_std14.py from the Adobe core-14 AFM files.

The AFM files ship with matplotlib (mpl-data/fonts/pdfcorefonts); only glyph
widths, the built-in encodings of Symbol/ZapfDingbats and the vertical
metrics are extracted.

    python tools/gen_std14.py
"""

import os
import sys

import matplotlib

AFM_DIR = os.path.join(matplotlib.get_data_path(), "fonts", "pdfcorefonts")
OUT = os.path.join(os.path.dirname(__file__), "..", "src", "docforge", "pdf", "_std14.py")

FONTS = [
    "Courier", "Courier-Bold", "Courier-Oblique", "Courier-BoldOblique",
    "Helvetica", "Helvetica-Bold", "Helvetica-Oblique", "Helvetica-BoldOblique",
    "Times-Roman", "Times-Bold", "Times-Italic", "Times-BoldItalic",
    "Symbol", "ZapfDingbats",
]


def parse_afm(path):
    widths, builtin = {}, {}
    ascender = descender = None
    with open(path, encoding="latin-1") as fh:
        for line in fh:
            if line.startswith("Ascender"):
                ascender = int(line.split()[1])
            elif line.startswith("Descender"):
                descender = int(line.split()[1])
            elif line.startswith("C "):
                fields = {}
                for part in line.split(";"):
                    bits = part.split()
                    if len(bits) >= 2:
                        fields[bits[0]] = bits[1]
                name, width, code = fields["N"], int(float(fields["WX"])), int(fields["C"])
                widths[name] = width
                if code >= 0:
                    builtin[code] = name
    return widths, builtin, ascender, descender


def main():
    metrics = {}
    for font in FONTS:
        widths, builtin, asc, desc = parse_afm(os.path.join(AFM_DIR, font + ".afm"))
        entry = {"widths": widths, "ascent": asc, "descent": desc}
        if font in ("Symbol", "ZapfDingbats"):
            entry["builtin"] = builtin
        metrics[font] = entry
    with open(OUT, "w") as fh:
        fh.write('"""Glyph metrics for the 14 standard PDF fonts.\n\n')
        fh.write("Generated by tools/gen_std14.py from the Adobe core-14 AFM files\n")
        fh.write("(Copyright (c) 1985-1997 Adobe Systems Incorporated. All Rights Reserved.)\n")
        fh.write("Only widths, vertical metrics and built-in encodings were extracted.\n")
        fh.write('"""\n\n# fmt: off\n')
        fh.write("METRICS = {\n")
        for font, entry in metrics.items():
            fh.write(f"    {font!r}: {entry!r},\n")
        fh.write("}\n")
    print(f"wrote {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
