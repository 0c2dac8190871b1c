"""Region computation and the keyed layout store."""

from __future__ import annotations

import pytest

from chainweave.errors import ArityMismatch, OverlapError, PermutationError
from chainweave.layout import (
    LayoutStore,
    LayoutTemplate,
    Region,
    TemplateKind,
    compute_regions,
    default_template,
    layout_from_obj,
    layout_to_obj,
)

ALL_TILING = (
    TemplateKind.SINGLE,
    TemplateKind.SPLIT_HORIZONTAL,
    TemplateKind.SPLIT_VERTICAL,
    TemplateKind.GRID,
)


def _as_tuples(regions):
    return [(r.x, r.y, r.width, r.height) for r in regions]


def test_single_fills_screen():
    assert _as_tuples(compute_regions(LayoutTemplate(TemplateKind.SINGLE), 1)) == [
        (0.0, 0.0, 1.0, 1.0)
    ]


def test_split_horizontal_two_halves():
    regions = compute_regions(LayoutTemplate(TemplateKind.SPLIT_HORIZONTAL), 2)
    assert _as_tuples(regions) == [(0.0, 0.0, 0.5, 1.0), (0.5, 0.0, 0.5, 1.0)]


def test_grid_three_widens_last_row():
    regions = compute_regions(LayoutTemplate(TemplateKind.GRID), 3)
    assert _as_tuples(regions) == [
        (0.0, 0.0, 0.5, 0.5),
        (0.5, 0.0, 0.5, 0.5),
        (0.0, 0.5, 1.0, 0.5),
    ]


def test_grid_eight_is_three_by_three_with_two_in_last_row():
    regions = compute_regions(LayoutTemplate(TemplateKind.GRID), 8)
    assert len(regions) == 8
    # first two rows hold three cells each of width 1/3
    for r in regions[:6]:
        assert r.width == pytest.approx(1 / 3)
    # last row has two widened cells
    assert regions[6].width == pytest.approx(0.5)
    assert regions[7].width == pytest.approx(0.5)


def test_single_arity_mismatch():
    with pytest.raises(ArityMismatch):
        compute_regions(LayoutTemplate(TemplateKind.SINGLE), 2)


def test_custom_arity_mismatch():
    template = LayoutTemplate(
        TemplateKind.CUSTOM, regions=(Region(0, 0, 0.5, 1.0), Region(0.5, 0, 0.5, 1.0))
    )
    with pytest.raises(ArityMismatch):
        compute_regions(template, 3)
    assert len(compute_regions(template, 2)) == 2


@pytest.mark.parametrize("kind", ALL_TILING)
@pytest.mark.parametrize("n", range(1, 13))
def test_tiling_templates_disjoint_and_cover(kind: TemplateKind, n: int):
    if kind is TemplateKind.SINGLE and n != 1:
        return
    regions = compute_regions(LayoutTemplate(kind), n)
    assert len(regions) == n
    total = 0.0
    for i, r in enumerate(regions):
        assert r.x >= -1e-9 and r.y >= -1e-9
        assert r.x + r.width <= 1 + 1e-9
        assert r.y + r.height <= 1 + 1e-9
        total += r.area
        for other in regions[i + 1:]:
            assert not r.interior_overlaps(other)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_compute_regions_deterministic_and_order_stable():
    a = compute_regions(LayoutTemplate(TemplateKind.GRID), 7)
    b = compute_regions(LayoutTemplate(TemplateKind.GRID), 7)
    assert _as_tuples(a) == _as_tuples(b)


def test_default_template_rules():
    assert default_template(1).kind is TemplateKind.SINGLE
    assert default_template(2).kind is TemplateKind.SPLIT_HORIZONTAL
    for n in range(3, 13):
        assert default_template(n).kind is TemplateKind.GRID


def test_pixel_conversion_rounds_half_up():
    region = Region(0.5, 0.0, 0.5, 1.0)
    assert region.to_pixels(1920, 1080) == (960, 0, 960, 1080)
    odd = Region(0.0, 0.0, 0.5, 0.5)
    # 0.5 * 101 = 50.5 -> rounds up to 51
    assert odd.to_pixels(101, 101) == (0, 0, 51, 51)


# --- store -----------------------------------------------------------------------

MEMBERS = frozenset({"t1", "t2"})
HALVES = (Region(0.0, 0.0, 0.5, 1.0), Region(0.5, 0.0, 0.5, 1.0))


def test_store_roundtrip():
    store = LayoutStore()
    saved = store.save_custom("s1", "ts1", HALVES, ("t2", "t1"), MEMBERS)
    looked_up = store.lookup("s1", "ts1")
    assert looked_up == saved
    regions, order = store.resolve("s1", "ts1", MEMBERS)
    assert order == ["t2", "t1"]
    assert _as_tuples(regions) == _as_tuples(HALVES)


def test_store_overlap_reports_first_pair():
    store = LayoutStore()
    overlapping = (Region(0.0, 0.0, 0.6, 1.0), Region(0.5, 0.0, 0.5, 1.0))
    with pytest.raises(OverlapError) as exc_info:
        store.save_custom("s1", "ts1", overlapping, ("t1", "t2"), MEMBERS)
    assert exc_info.value.pair == (0, 1)


def test_store_permutation_error():
    store = LayoutStore()
    with pytest.raises(PermutationError):
        store.save_custom("s1", "ts1", HALVES, ("t1", "t1"), MEMBERS)
    with pytest.raises(PermutationError):
        store.save_custom("s1", "ts1", HALVES, ("t1",), MEMBERS)


def test_store_keyed_by_step_and_toolset():
    # Two steps sharing a toolset may use different layouts.
    store = LayoutStore()
    vertical = (Region(0.0, 0.0, 1.0, 0.5), Region(0.0, 0.5, 1.0, 0.5))
    store.save_custom("s4", "ts", HALVES, ("t1", "t2"), MEMBERS)
    store.save_custom("s5", "ts", vertical, ("t2", "t1"), MEMBERS)
    _, order4 = store.resolve("s4", "ts", MEMBERS)
    regions5, order5 = store.resolve("s5", "ts", MEMBERS)
    assert order4 == ["t1", "t2"]
    assert order5 == ["t2", "t1"]
    assert _as_tuples(regions5) == _as_tuples(vertical)


def test_resolve_falls_back_to_default():
    store = LayoutStore()
    regions, order = store.resolve("s1", "ts", frozenset({"b", "a"}))
    assert order == ["a", "b"]  # sorted members
    assert _as_tuples(regions) == [(0.0, 0.0, 0.5, 1.0), (0.5, 0.0, 0.5, 1.0)]


def test_layout_obj_roundtrip():
    store = LayoutStore()
    saved = store.save_custom("s1", "ts1", HALVES, ("t1", "t2"), MEMBERS, assignment_id="v1")
    again = layout_from_obj(layout_to_obj(saved))
    assert again == saved
