"""Synthetic fixture generation with recorded ground truth."""

from docforge.synth.pdfwriter import FontSpec, PdfWriter, Run, SynthPdf

__all__ = ["FontSpec", "PdfWriter", "Run", "SynthPdf"]
