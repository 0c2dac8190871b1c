"""On-screen arrangement of tool views per (step, toolset) pair.

Regions use normalized [0,1] coordinates; pixel conversion happens only at
the tool-host boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ArityMismatch, DocumentSyntaxError, OverlapError, PermutationError

#: Numeric slack for boundary checks on normalized coordinates.
EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in normalized screen fractions."""

    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("region width and height must be positive")
        if self.x < -EDGE_TOLERANCE or self.y < -EDGE_TOLERANCE:
            raise ValueError("region origin must be non-negative")
        if self.x + self.width > 1 + EDGE_TOLERANCE or self.y + self.height > 1 + EDGE_TOLERANCE:
            raise ValueError("region must lie within the unit square")

    @property
    def area(self) -> float:
        return self.width * self.height

    def interior_overlaps(self, other: "Region") -> bool:
        return (
            self.x < other.x + other.width - EDGE_TOLERANCE
            and other.x < self.x + self.width - EDGE_TOLERANCE
            and self.y < other.y + other.height - EDGE_TOLERANCE
            and other.y < self.y + self.height - EDGE_TOLERANCE
        )

    def to_pixels(self, screen_w: int, screen_h: int) -> tuple[int, int, int, int]:
        """Integer pixel rect, each edge rounded half-up independently."""
        def rnd(v: float) -> int:
            return math.floor(v + 0.5)

        return (
            rnd(self.x * screen_w),
            rnd(self.y * screen_h),
            rnd(self.width * screen_w),
            rnd(self.height * screen_h),
        )


class TemplateKind(Enum):
    SINGLE = "single"
    SPLIT_HORIZONTAL = "split-horizontal"
    SPLIT_VERTICAL = "split-vertical"
    GRID = "grid"
    CUSTOM = "custom"


@dataclass(frozen=True)
class LayoutTemplate:
    kind: TemplateKind
    regions: tuple[Region, ...] = ()

    def __post_init__(self):
        if self.kind is TemplateKind.CUSTOM:
            if not self.regions:
                raise ValueError("custom template needs at least one region")
            check_disjoint(self.regions)
        elif self.regions:
            raise ValueError("only custom templates carry explicit regions")


def check_disjoint(regions: tuple[Region, ...]) -> None:
    """Raise OverlapError naming the first pair with intersecting interiors."""
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            if regions[i].interior_overlaps(regions[j]):
                raise OverlapError(f"regions {i} and {j} overlap", pair=(i, j))


def compute_regions(template: LayoutTemplate, n: int) -> list[Region]:
    """Deterministic regions for n slots; slot i always receives region i.

    Single/Split/Grid tile the whole unit square; the grid uses
    ceil(sqrt(n)) columns, fills row-major, and widens the last row's cells
    equally to span the full width.
    """
    if n < 1:
        raise ArityMismatch(f"need at least one slot, got {n}")
    kind = template.kind
    if kind is TemplateKind.SINGLE:
        if n != 1:
            raise ArityMismatch(f"single layout holds exactly one view, got {n}")
        return [Region(0.0, 0.0, 1.0, 1.0)]
    if kind is TemplateKind.SPLIT_HORIZONTAL:
        w = 1.0 / n
        return [Region(i * w, 0.0, w, 1.0) for i in range(n)]
    if kind is TemplateKind.SPLIT_VERTICAL:
        h = 1.0 / n
        return [Region(0.0, i * h, 1.0, h) for i in range(n)]
    if kind is TemplateKind.GRID:
        cols = math.ceil(math.sqrt(n))
        rows = math.ceil(n / cols)
        height = 1.0 / rows
        regions: list[Region] = []
        for row in range(rows):
            in_row = cols if row < rows - 1 else n - cols * (rows - 1)
            width = 1.0 / in_row
            for col in range(in_row):
                regions.append(Region(col * width, row * height, width, height))
        return regions
    # custom
    if n != len(template.regions):
        raise ArityMismatch(
            f"custom template has {len(template.regions)} regions but {n} slots requested"
        )
    return list(template.regions)


def default_template(n: int) -> LayoutTemplate:
    """Default arrangement for n concurrently shown views."""
    if n < 1:
        raise ArityMismatch(f"need at least one slot, got {n}")
    if n == 1:
        return LayoutTemplate(TemplateKind.SINGLE)
    if n == 2:
        return LayoutTemplate(TemplateKind.SPLIT_HORIZONTAL)
    return LayoutTemplate(TemplateKind.GRID)


@dataclass(frozen=True)
class LayoutAssignment:
    """A saved layout for one (workflow step, toolset) combination."""

    id: str
    step_id: str
    toolset_id: str
    template: LayoutTemplate
    slot_order: tuple[str, ...]


class LayoutStore:
    """Keyed custom layouts; lookups fall back to the default template.

    Keys are (step, toolset) pairs: the same toolset may use different
    arrangements in different steps.
    """

    def __init__(self, assignments: tuple[LayoutAssignment, ...] = ()):
        self._by_key: dict[tuple[str, str], LayoutAssignment] = {
            (a.step_id, a.toolset_id): a for a in assignments
        }
        self._counter = len(self._by_key)

    def save_custom(
        self,
        step_id: str,
        toolset_id: str,
        regions: tuple[Region, ...],
        slot_order: tuple[str, ...],
        member_tool_ids: frozenset[str],
        assignment_id: str | None = None,
    ) -> LayoutAssignment:
        """Persist a custom arrangement; later lookups return it over the default."""
        if set(slot_order) != set(member_tool_ids) or len(slot_order) != len(member_tool_ids):
            raise PermutationError(
                f"slot order {list(slot_order)!r} is not a permutation of the toolset members"
            )
        if len(regions) != len(slot_order):
            raise ArityMismatch(
                f"{len(regions)} regions for {len(slot_order)} slots"
            )
        check_disjoint(regions)
        self._counter += 1
        assignment = LayoutAssignment(
            id=assignment_id or f"layout-{self._counter}",
            step_id=step_id,
            toolset_id=toolset_id,
            template=LayoutTemplate(TemplateKind.CUSTOM, regions=regions),
            slot_order=slot_order,
        )
        self._by_key[(step_id, toolset_id)] = assignment
        return assignment

    def lookup(self, step_id: str, toolset_id: str) -> LayoutAssignment | None:
        return self._by_key.get((step_id, toolset_id))

    def resolve(
        self, step_id: str, toolset_id: str, member_tool_ids: frozenset[str]
    ) -> tuple[list[Region], list[str]]:
        """Regions plus slot order for a step, saved or default."""
        saved = self.lookup(step_id, toolset_id)
        if saved is not None:
            return (
                compute_regions(saved.template, len(saved.slot_order)),
                list(saved.slot_order),
            )
        order = sorted(member_tool_ids)
        template = default_template(len(order))
        return compute_regions(template, len(order)), order

    def assignments(self) -> list[LayoutAssignment]:
        return [self._by_key[k] for k in sorted(self._by_key)]


# --- serialization ------------------------------------------------------------

def layout_to_obj(assignment: LayoutAssignment) -> dict:
    obj: dict = {
        "id": assignment.id,
        "step": assignment.step_id,
        "toolset": assignment.toolset_id,
        "template": assignment.template.kind.value,
        "slots": list(assignment.slot_order),
    }
    if assignment.template.kind is TemplateKind.CUSTOM:
        obj["regions"] = [[r.x, r.y, r.width, r.height] for r in assignment.template.regions]
    return obj


def layout_from_obj(raw: dict) -> LayoutAssignment:
    try:
        kind = TemplateKind(raw["template"])
        regions = tuple(
            Region(float(x), float(y), float(w), float(h))
            for x, y, w, h in raw.get("regions", [])
        )
        template = LayoutTemplate(kind, regions=regions if kind is TemplateKind.CUSTOM else ())
        return LayoutAssignment(
            id=str(raw["id"]),
            step_id=str(raw["step"]),
            toolset_id=str(raw["toolset"]),
            template=template,
            slot_order=tuple(str(s) for s in raw["slots"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentSyntaxError(f"malformed layout assignment: {exc}") from exc
