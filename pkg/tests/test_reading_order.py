import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docforge.layout import LayoutCluster
from docforge.model import BoundingBox, ItemLabel
from docforge.pipeline.reading_order import match_captions, reading_order


def col(l, r, t, heights, gap=6.0):
    """Blocks stacked down one column; gaps under 8 pt never split the page."""
    out = []
    for h in heights:
        out.append((l, t, r, t + h))
        t += h + gap
    return out


def wide(t, h):
    return [(72, t, 540, t + h)]


# Each fixture lists its boxes in the intended reading order.
FIXTURES = {
    "single-three-stacked": wide(72, 40) + wide(130, 60) + wide(210, 90),
    "single-tight-gaps": col(72, 540, 72, [20, 20, 20, 20], gap=3),
    "single-one-block": wide(300, 50),
    "single-indented-list": [(72, 100, 540, 112), (90, 116, 540, 128), (90, 132, 540, 144), (72, 148, 540, 160)],
    "two-col-basic": col(72, 294, 72, [80, 120, 100]) + col(318, 540, 72, [150, 140]),
    "two-col-staggered-paragraph-gaps": [(72, 72, 294, 150), (72, 162, 294, 330),
                                         (318, 72, 540, 200), (318, 210, 540, 330)],
    "two-col-left-longer": col(72, 294, 72, [200, 200, 200]) + col(318, 540, 72, [150, 100]),
    "two-col-right-longer": col(72, 294, 72, [120]) + col(318, 540, 72, [200, 200, 200]),
    "two-col-gap-12": col(72, 300, 72, [100, 100]) + col(312, 540, 72, [150, 40]),
    "three-col": col(72, 220, 72, [100, 90]) + col(232, 380, 72, [60, 150]) + col(392, 540, 72, [200]),
    "title-over-two-col": wide(40, 24) + col(72, 294, 80, [100, 60]) + col(318, 540, 80, [170]),
    "title-over-three-col": wide(40, 30) + col(72, 220, 90, [80, 80]) + col(232, 380, 90, [170])
    + col(392, 540, 90, [40]),
    "title-abstract-two-col": wide(40, 24) + [(150, 80, 462, 140)] + col(72, 294, 160, [200, 100])
    + col(318, 540, 160, [150, 160]),
    "two-col-figure-between": col(72, 294, 72, [80, 60]) + col(318, 540, 72, [146])
    + wide(240, 200) + col(72, 294, 460, [100]) + col(318, 540, 460, [40, 54]),
    "two-col-then-wide-table": col(72, 294, 72, [150, 150]) + col(318, 540, 72, [306])
    + wide(400, 120) + wide(540, 60),
    "mixed-title-para-cols-footer-note": wide(40, 24) + wide(76, 50) + col(72, 294, 140, [300])
    + col(318, 540, 140, [100, 194]) + wide(470, 30),
    "side-by-side-author-blocks": [(72, 80, 250, 120), (362, 80, 540, 120)] + wide(140, 200),
    "figure-and-caption-left-col": col(72, 294, 72, [150, 20, 120]) + col(318, 540, 72, [302]),
    "header-in-right-col": col(72, 294, 72, [300]) + col(318, 540, 72, [14, 280]),
    "two-col-uneven-gutter": col(60, 280, 72, [250, 50]) + col(330, 552, 72, [90, 90, 90]),
}


def clusters_of(boxes, seed=0):
    """Clusters for the boxes with ids unrelated to the intended order."""
    ids = list(range(len(boxes)))
    random.Random(seed).shuffle(ids)
    return [LayoutCluster(i, ItemLabel.TEXT, BoundingBox(*b)) for i, b in zip(ids, boxes)]


def test_twenty_fixtures():
    assert len(FIXTURES) == 20


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture_order(name):
    clusters = clusters_of(FIXTURES[name])
    expected = [c.id for c in clusters]
    for seed in range(5):
        shuffled = clusters[:]
        random.Random(seed).shuffle(shuffled)
        assert [c.id for c in reading_order(shuffled)] == expected


def test_empty_page():
    assert reading_order([]) == []


def test_narrow_gutter_does_not_split():
    # 11 pt gutter with no horizontal band: a single leaf read by top edge
    boxes = col(72, 300, 72, [100, 100]) + col(311, 540, 72, [150, 40])
    clusters = clusters_of(boxes)
    got = [c.id for c in reading_order(clusters)]
    by_top = [c.id for c in sorted(clusters, key=lambda c: (c.bbox.t, c.bbox.l))]
    assert got == by_top


def test_horizontal_split_wins_over_vertical():
    # aligned 12 pt paragraph gaps across both columns split the page into rows first
    boxes = col(72, 294, 72, [78, 78], gap=12) + col(318, 540, 72, [78, 78], gap=12)
    clusters = clusters_of(boxes)
    got = [c.bbox.as_tuple()[:2] for c in reading_order(clusters)]
    assert got == [(72, 72), (318, 72), (72, 162), (318, 162)]


def random_clusters(rng, n):
    out = []
    for i in range(n):
        l, t = rng.uniform(0, 560), rng.uniform(0, 740)
        out.append(LayoutCluster(i, ItemLabel.TEXT, BoundingBox(l, t, l + rng.uniform(0, 200), t + rng.uniform(0, 120))))
    return out


def test_permutation_on_random_sets():
    rng = random.Random(11)
    for _ in range(1000):
        clusters = random_clusters(rng, rng.randint(0, 30))
        got = reading_order(clusters)
        assert sorted(c.id for c in got) == sorted(c.id for c in clusters)


@given(st.integers(0, 2**32), st.integers(0, 2**32))
def test_shuffle_never_changes_order(seed, shuffle_seed):
    rng = random.Random(seed)
    clusters = random_clusters(rng, rng.randint(0, 25))
    # duplicated boxes make ties that only the id can break
    if clusters:
        clusters.append(LayoutCluster(len(clusters), ItemLabel.TEXT, clusters[0].bbox))
    shuffled = clusters[:]
    random.Random(shuffle_seed).shuffle(shuffled)
    assert [c.id for c in reading_order(shuffled)] == [c.id for c in reading_order(clusters)]


# -- captions ----------------------------------------------------------------


def cl(i, label, box):
    return LayoutCluster(i, label, BoundingBox(*box))


def test_caption_below_figure():
    fig = cl(0, ItemLabel.PICTURE, (72, 100, 300, 300))
    cap = cl(1, ItemLabel.CAPTION, (72, 310, 300, 322))
    assert match_captions([fig, cap]) == {1: 0}


def test_caption_far_away_is_unassigned():
    fig = cl(0, ItemLabel.PICTURE, (72, 100, 300, 300))
    cap = cl(1, ItemLabel.CAPTION, (72, 400, 300, 412))
    assert match_captions([fig, cap]) == {}


def test_nearer_of_two_captions_wins():
    table = cl(0, ItemLabel.TABLE, (72, 100, 300, 200))
    near = cl(1, ItemLabel.CAPTION, (72, 205, 300, 215))   # 5 pt below
    far = cl(2, ItemLabel.CAPTION, (72, 230, 300, 240))    # 30 pt below
    assert match_captions([table, far, near]) == {1: 0}


def test_below_is_searched_before_above():
    upper = cl(0, ItemLabel.TABLE, (72, 100, 300, 200))
    lower = cl(1, ItemLabel.PICTURE, (72, 215, 300, 400))
    cap = cl(2, ItemLabel.CAPTION, (72, 210, 300, 212))  # 10 below upper, 3 above lower
    assert match_captions([upper, lower, cap]) == {2: 0}
    assert match_captions([upper, lower, cap], prefer_below=False) == {2: 1}


def test_caption_needs_horizontal_overlap():
    fig = cl(0, ItemLabel.PICTURE, (72, 100, 200, 300))
    cap = cl(1, ItemLabel.CAPTION, (180, 305, 400, 315))  # 20 of 128 pt overlap
    assert match_captions([fig, cap]) == {}


def test_loser_takes_its_next_target():
    a = cl(0, ItemLabel.PICTURE, (72, 100, 300, 200))
    b = cl(1, ItemLabel.PICTURE, (72, 260, 300, 400))
    c1 = cl(2, ItemLabel.CAPTION, (72, 204, 300, 214))   # 4 below a
    c2 = cl(3, ItemLabel.CAPTION, (72, 220, 300, 230))   # 20 below a, 30 above b
    assert match_captions([a, b, c1, c2]) == {2: 0, 3: 1}
