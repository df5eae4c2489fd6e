"""Deterministic SVG rendering of layouts: colored class boxes plus a legend."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .core import Layout

__all__ = ["PALETTE", "layout_to_svg", "save_corpus_svgs"]

# schema position -> fill color, cycled when a schema has more classes
PALETTE = (
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
    "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
)

_LEGEND_W = 150.0


def class_color(class_id: int) -> str:
    return PALETTE[class_id % len(PALETTE)]


def layout_to_svg(layout: Layout, legend: bool = True) -> str:
    pw, ph = layout.page
    total_w = pw + (_LEGEND_W if legend else 0.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {total_w:g} {ph:g}" '
        f'width="{total_w:g}" height="{ph:g}">',
        f'<rect class="page" x="0" y="0" width="{pw:g}" height="{ph:g}" '
        f'fill="white" stroke="#333" stroke-width="1"/>',
    ]
    for el in layout.elements:
        color = class_color(el.class_id)
        name = layout.schema.names[el.class_id]
        parts.append(
            f'<rect class="box" data-class="{name}" data-class-id="{el.class_id}" '
            f'x="{el.x:g}" y="{el.y:g}" width="{el.w:g}" height="{el.h:g}" '
            f'fill="{color}" fill-opacity="0.55" stroke="{color}" stroke-width="1.5"/>'
        )
    if legend:
        lx = pw + 14.0
        for i, name in enumerate(layout.schema.names):
            ly = 20.0 + 26.0 * i
            parts.append(
                f'<rect class="legend" x="{lx:g}" y="{ly:g}" width="16" height="16" '
                f'fill="{class_color(i)}" fill-opacity="0.55" stroke="{class_color(i)}"/>'
            )
            parts.append(
                f'<text x="{lx + 22:g}" y="{ly + 13:g}" font-size="13" '
                f'font-family="sans-serif">{name}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def save_corpus_svgs(layouts: Sequence[Layout], out_dir, legend: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, lay in enumerate(layouts):
        name = lay.doc_id if lay.doc_id else f"layout_{i:05d}"
        path = out_dir / f"{Path(str(name)).stem}.svg"
        path.write_text(layout_to_svg(lay, legend=legend))
        paths.append(path)
    return paths
