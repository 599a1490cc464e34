"""Exception hierarchy shared by all docforge modules."""

from __future__ import annotations


class DocforgeError(Exception):
    """Base class for every error raised by docforge."""


# document model


class UnresolvableParent(DocforgeError):
    pass


class LabelPlacementViolation(DocforgeError):
    pass


class SchemaVersionMismatch(DocforgeError):
    pass


class MalformedPayload(DocforgeError):
    pass


class DanglingRef(MalformedPayload):
    pass


# pdf backend


class PdfError(DocforgeError):
    pass


class NotAPdf(PdfError):
    pass


class EncryptedPdf(PdfError):
    pass


class CorruptXref(PdfError):
    pass


class UnsupportedFilter(PdfError):
    pass


class CorruptStream(PdfError):
    pass


# markup backends


class UndecodableInput(DocforgeError):
    pass


# layout sidecar


class SidecarError(DocforgeError):
    pass


class SidecarMissing(SidecarError):
    pass


class SidecarSchemaError(SidecarError):
    pass


class PageMismatch(SidecarError):
    pass


# pipeline / bench


class UnsupportedFormat(DocforgeError):
    pass


class EmptyCorpus(DocforgeError):
    pass
