"""Crop/paste planning: match each generated box to its nearest real box.

For every generated box the planner picks the real box of the same class
minimizing ``w_ar * |log(ar_g / ar_r)| + w_area * |log(area_g / area_r)|``
(aspect ratio and area compared in normalized page units). The plan names
source image ids and boxes; actual pixel compositing is downstream work and
out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Layout
from .errors import ValidationError

__all__ = ["MosaicEntry", "build_mosaic_plan", "nearest_box_cost"]


@dataclass(frozen=True)
class MosaicEntry:
    gen_layout: int
    gen_box: int
    matched: bool
    cost: float | None = None
    source_id: str | None = None
    source_box: tuple[float, float, float, float] | None = None
    target_box: tuple[float, float, float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "gen_layout": self.gen_layout,
            "gen_box": self.gen_box,
            "matched": self.matched,
            "cost": self.cost,
            "source_id": self.source_id,
            "source_box": list(self.source_box) if self.source_box else None,
            "target_box": list(self.target_box) if self.target_box else None,
        }


def nearest_box_cost(ar_g, area_g, ar_r, area_r, w_ar=1.0, w_area=1.0):
    """Scale-symmetric log-ratio cost between a generated and a real box."""
    return w_ar * np.abs(np.log(ar_g / ar_r)) + w_area * np.abs(np.log(area_g / area_r))


def _normalized_geometry(layouts: Sequence[Layout]):
    """Per-class arrays of (aspect, area, owner index, raw box)."""
    by_class: dict[int, list] = {}
    for li, lay in enumerate(layouts):
        pw, ph = lay.page
        for el in lay.elements:
            nw, nh = el.w / pw, el.h / ph
            by_class.setdefault(el.class_id, []).append(
                (nw / nh, nw * nh, li, (el.x, el.y, el.w, el.h))
            )
    return {
        c: (
            np.array([r[0] for r in rows]),
            np.array([r[1] for r in rows]),
            [r[2] for r in rows],
            [r[3] for r in rows],
        )
        for c, rows in by_class.items()
    }


def build_mosaic_plan(
    generated: Sequence[Layout],
    real: Sequence[Layout],
    w_ar: float = 1.0,
    w_area: float = 1.0,
) -> list[MosaicEntry]:
    """One entry per generated box; boxes of classes absent from the real
    corpus are flagged unmatched rather than erroring."""
    if not len(real):
        raise ValidationError("mosaic planning needs a nonempty real corpus")
    pool = _normalized_geometry(real)
    plan = []
    for gi, lay in enumerate(generated):
        pw, ph = lay.page
        for bi, el in enumerate(lay.elements):
            target = (el.x, el.y, el.w, el.h)
            if el.class_id not in pool:
                plan.append(MosaicEntry(gi, bi, matched=False, target_box=target))
                continue
            ars, areas, owners, boxes = pool[el.class_id]
            nw, nh = el.w / pw, el.h / ph
            costs = nearest_box_cost(nw / nh, nw * nh, ars, areas, w_ar, w_area)
            k = int(np.argmin(costs))
            src = real[owners[k]]
            plan.append(
                MosaicEntry(
                    gi, bi, matched=True, cost=float(costs[k]),
                    source_id=src.doc_id if src.doc_id else str(owners[k]),
                    source_box=boxes[k], target_box=target,
                )
            )
    return plan
