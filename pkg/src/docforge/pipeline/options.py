"""Conversion options and thread-budget resolution."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Union

from docforge.layout import LayoutSource
from docforge.markup.source import InputFormat
from docforge.pdf.content import DEFAULT_SPLIT_GAP

THREAD_ENV = "DOCFORGE_NUM_THREADS"
OMP_ENV = "OMP_NUM_THREADS"


class OcrMode(str, Enum):
    # reserved slot; no OCR engine ships
    DISABLED = "disabled"


def _positive(value: Optional[str]) -> Optional[int]:
    try:
        n = int(str(value).strip())
    except (TypeError, ValueError):
        return None
    return n if n >= 1 else None


def resolve_thread_budget(explicit: Optional[int] = None, env: Optional[Mapping[str, str]] = None) -> int:
    """Most specific wins: explicit value, then DOCFORGE_NUM_THREADS, then OMP_NUM_THREADS, then 1."""
    if explicit is not None:
        if explicit < 1:
            raise ValueError(f"thread budget must be >= 1, got {explicit}")
        return explicit
    env = os.environ if env is None else env
    for key in (THREAD_ENV, OMP_ENV):
        n = _positive(env.get(key))
        if n is not None:
            return n
    return 1


@dataclass
class ConversionOptions:
    do_table_structure: bool = True
    layout_source: LayoutSource = LayoutSource.HEURISTIC
    # a sidecar file, or a directory holding <stem>.json per input
    sidecar_path: Optional[Path] = None
    ocr: OcrMode = OcrMode.DISABLED
    export_targets: tuple[str, ...] = ()
    thread_budget: int = field(default_factory=resolve_thread_budget)
    force_format: Optional[InputFormat] = None
    split_gap: float = DEFAULT_SPLIT_GAP

    def __post_init__(self) -> None:
        if self.thread_budget < 1:
            raise ValueError(f"thread_budget must be >= 1, got {self.thread_budget}")
        self.layout_source = LayoutSource(self.layout_source)
        self.ocr = OcrMode(self.ocr)
        if self.sidecar_path is not None:
            self.sidecar_path = Path(self.sidecar_path)
            self.layout_source = LayoutSource.SIDECAR
        elif self.layout_source is LayoutSource.SIDECAR:
            raise ValueError("sidecar layout source needs sidecar_path")

    def sidecar_for(self, name: Union[str, Path]) -> Optional[Path]:
        if self.layout_source is not LayoutSource.SIDECAR or self.sidecar_path is None:
            return None
        if self.sidecar_path.is_dir():
            return self.sidecar_path / f"{Path(name).stem}.json"
        return self.sidecar_path
