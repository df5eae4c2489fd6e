"""Corpus ingestion and the native JSONL interchange format.

JSONL records carry one layout per line::

    {"page": [w, h], "schema": ["text", ...], "boxes": [[c, x, y, w, h], ...]}

plus an optional trailing ``"id"`` key when the layout has a document id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .core import ClassSchema, Layout, LayoutElement
from .errors import FormatError, ValidationError

__all__ = [
    "IngestStats",
    "ingest_coco",
    "ingest_jsonl",
    "emit_jsonl",
    "read_jsonl",
    "write_jsonl",
]


@dataclass
class IngestStats:
    clipped: int = 0
    dropped: int = 0


def _clip_box(x, y, w, h, pw, ph):
    """Clip a raw bbox to the page; returns None when nothing is left."""
    x2, y2 = x + w, y + h
    cx, cy = max(x, 0.0), max(y, 0.0)
    cx2, cy2 = min(x2, pw), min(y2, ph)
    if cx2 - cx <= 0 or cy2 - cy <= 0:
        return None
    return cx, cy, cx2 - cx, cy2 - cy


def ingest_coco(doc: dict) -> tuple[list[Layout], IngestStats]:
    """Build one layout per image from a COCO-style annotation document.

    Category ids are remapped to a dense ``[0, K)`` schema ordered by the
    original ids. Boxes are clipped to the page (counted); zero or negative
    extents are dropped (counted). Annotation order is preserved per image.
    """
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise FormatError(f"COCO document missing {key!r} array")

    cats = sorted(doc["categories"], key=lambda c: c["id"])
    id_map = {c["id"]: i for i, c in enumerate(cats)}
    schema = ClassSchema(tuple(str(c["name"]) for c in cats))

    by_image: dict = {img["id"]: [] for img in doc["images"]}
    for ann in doc["annotations"]:
        img_id = ann.get("image_id")
        if img_id in by_image:
            by_image[img_id].append(ann)

    stats = IngestStats()
    layouts = []
    for img in doc["images"]:
        pw, ph = float(img["width"]), float(img["height"])
        elements = []
        for ann in by_image[img["id"]]:
            if ann["category_id"] not in id_map:
                raise FormatError(f"annotation references unknown category {ann['category_id']}")
            x, y, w, h = (float(v) for v in ann["bbox"])
            if w <= 0 or h <= 0:
                stats.dropped += 1
                continue
            clipped = _clip_box(x, y, w, h, pw, ph)
            if clipped is None:
                stats.dropped += 1
                stats.clipped += 1
                continue
            if clipped != (x, y, w, h):
                stats.clipped += 1
            cx, cy, cw, ch = clipped
            elements.append(LayoutElement(id_map[ann["category_id"]], cx, cy, cw, ch))
        layouts.append(
            Layout(tuple(elements), pw, ph, schema, doc_id=str(img.get("file_name", img["id"])))
        )
    return layouts, stats


def _layout_to_record(layout: Layout) -> dict:
    rec = {
        "page": [layout.page_width, layout.page_height],
        "schema": list(layout.schema.names),
        "boxes": [[el.class_id, el.x, el.y, el.w, el.h] for el in layout.elements],
    }
    if layout.doc_id is not None:
        rec["id"] = layout.doc_id
    return rec


def emit_jsonl(layouts: Iterable[Layout], fp: IO[str]) -> None:
    for layout in layouts:
        fp.write(json.dumps(_layout_to_record(layout)) + "\n")


def ingest_jsonl(fp: IO[str], schema: ClassSchema | None = None) -> list[Layout]:
    """Read layouts back; with ``schema`` given, every record must use class
    names drawn from it (ids are remapped to the enforced schema)."""
    layouts = []
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            pw, ph = rec["page"]
            names = tuple(rec["schema"])
            boxes = rec["boxes"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"line {lineno}: malformed record ({exc})") from exc
        rec_schema = ClassSchema(names)
        if schema is not None:
            for name in names:
                if name not in schema.names:
                    raise ValidationError(f"line {lineno}: class {name!r} not in schema")
            remap = {i: schema.index(name) for i, name in enumerate(names)}
            out_schema = schema
        else:
            remap = {i: i for i in range(len(names))}
            out_schema = rec_schema
        try:
            elements = tuple(
                LayoutElement(remap[int(c)], float(x), float(y), float(w), float(h))
                for c, x, y, w, h in boxes
            )
            layouts.append(Layout(elements, float(pw), float(ph), out_schema,
                                  doc_id=rec.get("id")))
        except (ValidationError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"line {lineno}: bad box data ({exc})") from exc
    return layouts


def write_jsonl(layouts: Iterable[Layout], path: str | Path) -> None:
    with open(path, "w") as fp:
        emit_jsonl(layouts, fp)


def read_jsonl(path: str | Path, schema: ClassSchema | None = None) -> list[Layout]:
    with open(path) as fp:
        return ingest_jsonl(fp, schema)
