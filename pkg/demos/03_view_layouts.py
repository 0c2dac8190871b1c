"""
View layouts per step and toolset
=================================

Default templates tile the screen for n concurrent tool views; custom
arrangements are saved per (step, toolset) pair, so the same toolset can
look different in different steps.
"""

from chainweave import (
    LayoutStore,
    LayoutTemplate,
    Region,
    TemplateKind,
    compute_regions,
    default_template,
)


def show(label, regions):
    cells = ", ".join(f"({r.x:.2f},{r.y:.2f} {r.width:.2f}x{r.height:.2f})" for r in regions)
    print(f"{label:22} {cells}")


# One view gets the whole screen, two views split it, more become a grid.
for n in (1, 2, 3, 5, 8):
    template = default_template(n)
    show(f"{n} view(s) -> {template.kind.value}", compute_regions(template, n))

# The pixel rects pushed to the tools depend on the actual screen.
region = Region(0.7, 0.0, 0.3, 1.0)
print("\nstatistics panel on 1920x1080:", region.to_pixels(1920, 1080))
print("statistics panel on 1366x768: ", region.to_pixels(1366, 768))

# A saved custom layout wins over the default, keyed by step AND toolset.
store = LayoutStore()
members = frozenset({"t_vaoct", "t_rstats"})
store.save_custom(
    "s6", "TS_oct",
    regions=(Region(0.0, 0.0, 0.7, 1.0), Region(0.7, 0.0, 0.3, 1.0)),
    slot_order=("t_vaoct", "t_rstats"),
    member_tool_ids=members,
)
regions, order = store.resolve("s6", "TS_oct", members)
print("\ns6 custom layout:", order)
show("  regions", regions)
regions, order = store.resolve("s2", "TS_oct", members)
print("s2 falls back to default:", order)
show("  regions", regions)
