"""Reading order by recursive XY-cut, and caption-to-target matching."""

from __future__ import annotations

from typing import Optional

from docforge.layout import LayoutCluster
from docforge.model import BoundingBox, ItemLabel

H_GAP = 8.0   # minimum full-width horizontal whitespace band
V_GAP = 12.0  # minimum full-height vertical whitespace band
CAPTION_DISTANCE = 48.0
CAPTION_OVERLAP = 0.3
CAPTION_TARGETS = frozenset({ItemLabel.TABLE, ItemLabel.PICTURE})


def _widest_gap(intervals: list[tuple[float, float]]) -> Optional[tuple[float, float]]:
    """(width, cut) of the widest empty band between merged intervals; the first one on ties."""
    ordered = sorted(intervals)
    best: Optional[tuple[float, float]] = None
    end = ordered[0][1]
    for lo, hi in ordered[1:]:
        if lo > end and (best is None or lo - end > best[0]):
            best = (lo - end, end)
        end = max(end, hi)
    return best


def _xy_cut(items: list[LayoutCluster]) -> list[LayoutCluster]:
    if len(items) <= 1:
        return list(items)
    gap = _widest_gap([(c.bbox.t, c.bbox.b) for c in items])
    if gap is not None and gap[0] >= H_GAP:
        cut = gap[1]
        upper = [c for c in items if c.bbox.b <= cut]
        lower = [c for c in items if c.bbox.b > cut]
        return _xy_cut(upper) + _xy_cut(lower)
    gap = _widest_gap([(c.bbox.l, c.bbox.r) for c in items])
    if gap is not None and gap[0] >= V_GAP:
        cut = gap[1]
        left = [c for c in items if c.bbox.r <= cut]
        right = [c for c in items if c.bbox.r > cut]
        return _xy_cut(left) + _xy_cut(right)
    return sorted(items, key=lambda c: (c.bbox.t, c.bbox.l, c.id))


def reading_order(clusters: list[LayoutCluster]) -> list[LayoutCluster]:
    """Order one page's body clusters; the result is a permutation of the input.

    The widest horizontal whitespace band of at least 8 pt splits the set
    into top and bottom; failing that, the widest vertical band of at
    least 12 pt splits it into left and right. Leaves are read by top
    edge, then left edge.
    """
    return _xy_cut(sorted(clusters, key=lambda c: (c.bbox.t, c.bbox.l, c.bbox.b, c.bbox.r, c.id)))


def _h_overlap(a: BoundingBox, b: BoundingBox) -> float:
    narrow = min(a.width, b.width)
    inter = min(a.r, b.r) - max(a.l, b.l)
    if narrow <= 0:
        return 1.0 if inter >= 0 else 0.0
    return max(0.0, inter) / narrow


def match_captions(clusters: list[LayoutCluster], prefer_below: bool = True) -> dict[int, int]:
    """Map caption cluster id to the table or picture cluster it describes.

    A caption looks for targets it sits below, then for targets it sits
    above, within 48 pt vertically and with at least 30% horizontal
    overlap. Pairs are granted greedily by (search phase, distance), so a
    target keeps only its nearest caption and the losing caption may still
    take its next candidate or stay standalone.
    """
    captions = [c for c in clusters if c.label is ItemLabel.CAPTION]
    targets = [c for c in clusters if c.label in CAPTION_TARGETS]
    pairs = []
    for cap in captions:
        cy = (cap.bbox.t + cap.bbox.b) / 2
        for tgt in targets:
            if _h_overlap(cap.bbox, tgt.bbox) < CAPTION_OVERLAP:
                continue
            below = cy >= (tgt.bbox.t + tgt.bbox.b) / 2
            dist = max(0.0, cap.bbox.t - tgt.bbox.b) if below else max(0.0, tgt.bbox.t - cap.bbox.b)
            if dist > CAPTION_DISTANCE:
                continue
            phase = 0 if below == prefer_below else 1
            pairs.append((phase, dist, cap.id, tgt.id))
    out: dict[int, int] = {}
    taken: set[int] = set()
    for phase, dist, cap_id, tgt_id in sorted(pairs):
        if cap_id in out or tgt_id in taken:
            continue
        out[cap_id] = tgt_id
        taken.add(tgt_id)
    return out
