"""Seeded synthetic corpora.

``two_column_corpus`` is the desk-scale stand-in for a real document
dataset: a title bar followed by two columns of text blocks, occasionally
swapping a block for a figure, list, or table. Its token statistics are
deterministic given the seed, which makes it usable as a training corpus
with a known reference distribution.
"""

from __future__ import annotations

import numpy as np

from .core import ClassSchema, Layout, LayoutElement

__all__ = [
    "ARTICLE_SCHEMA",
    "two_column_corpus",
    "uniform_random_corpus",
    "random_layouts",
    "shift_layout",
    "drop_class",
]

ARTICLE_SCHEMA = ClassSchema(("text", "title", "list", "figure", "table"))

_PAGE = (850.0, 1100.0)


def _two_column_layout(rng: np.random.Generator, page=_PAGE) -> Layout:
    pw, ph = page
    ml, mr, mt, mb = 64.0, 64.0, 72.0, 80.0
    gutter = 34.0
    col_w = (pw - ml - mr - gutter) / 2.0

    elements = []
    title_w = rng.uniform(0.52, 0.68) * (pw - ml - mr)
    title_h = rng.uniform(36.0, 56.0)
    title_x = ml + rng.uniform(0.0, (pw - ml - mr) - title_w)
    elements.append(LayoutElement(ARTICLE_SCHEMA.index("title"), title_x, mt,
                                  title_w, title_h))

    body_top = mt + title_h + rng.uniform(20.0, 36.0)
    special = rng.random()
    if special < 0.35:
        special_cls = ARTICLE_SCHEMA.index("figure")
    elif special < 0.50:
        special_cls = ARTICLE_SCHEMA.index("table")
    elif special < 0.62:
        special_cls = ARTICLE_SCHEMA.index("list")
    else:
        special_cls = None
    special_slot = int(rng.integers(0, 6)) if special_cls is not None else -1

    slot = 0
    for col in range(2):
        x0 = ml + col * (col_w + gutter)
        y = body_top
        blocks = 0
        while blocks < 5:
            h = rng.uniform(120.0, 260.0)
            if y + h > ph - mb:
                h = ph - mb - y
                if h < 90.0:
                    break
            w = col_w - rng.uniform(0.0, 10.0)
            cls = special_cls if slot == special_slot else ARTICLE_SCHEMA.index("text")
            elements.append(LayoutElement(cls, x0 + rng.uniform(0.0, 4.0), y, w, h))
            y += h + rng.uniform(14.0, 30.0)
            blocks += 1
            slot += 1
    return Layout(tuple(elements), pw, ph, ARTICLE_SCHEMA)


def two_column_corpus(n: int, seed: int = 0, page=_PAGE) -> list[Layout]:
    rng = np.random.default_rng(seed)
    return [_two_column_layout(rng, page) for _ in range(n)]


def uniform_random_corpus(
    n: int,
    seed: int = 0,
    schema: ClassSchema = ARTICLE_SCHEMA,
    page=_PAGE,
    max_boxes: int = 10,
) -> list[Layout]:
    """Structureless baseline: boxes anywhere, classes uniform."""
    rng = np.random.default_rng(seed)
    pw, ph = page
    out = []
    for _ in range(n):
        k = int(rng.integers(3, max_boxes + 1))
        elements = []
        for _ in range(k):
            w = rng.uniform(0.06, 0.5) * pw
            h = rng.uniform(0.04, 0.4) * ph
            x = rng.uniform(0.0, pw - w)
            y = rng.uniform(0.0, ph - h)
            elements.append(LayoutElement(int(rng.integers(0, schema.K)), x, y, w, h))
        out.append(Layout(tuple(elements), pw, ph, schema))
    return out


def random_layouts(
    n: int,
    seed: int = 0,
    schema: ClassSchema = ARTICLE_SCHEMA,
    page=_PAGE,
    boxes=(3, 6),
    size_frac=(0.08, 0.2),
) -> list[Layout]:
    """Generic random layouts with controllable box count and size."""
    rng = np.random.default_rng(seed)
    pw, ph = page
    out = []
    for _ in range(n):
        k = int(rng.integers(boxes[0], boxes[1] + 1))
        elements = []
        for _ in range(k):
            w = rng.uniform(*size_frac) * pw
            h = rng.uniform(*size_frac) * ph
            x = rng.uniform(0.0, pw - w)
            y = rng.uniform(0.0, ph - h)
            elements.append(LayoutElement(int(rng.integers(0, schema.K)), x, y, w, h))
        out.append(Layout(tuple(elements), pw, ph, schema))
    return out


def shift_layout(layout: Layout, dx_frac: float = 0.1, dy_frac: float = 0.0) -> Layout:
    """Translate all boxes by a page fraction, clipping at the page edge."""
    pw, ph = layout.page
    dx, dy = dx_frac * pw, dy_frac * ph
    moved = []
    for el in layout.elements:
        x = min(max(el.x + dx, 0.0), pw - 1e-6)
        y = min(max(el.y + dy, 0.0), ph - 1e-6)
        w = min(el.w, pw - x)
        h = min(el.h, ph - y)
        if w > 0 and h > 0:
            moved.append(LayoutElement(el.class_id, x, y, w, h))
    return layout.replace_elements(moved)


def drop_class(layout: Layout, class_id: int) -> Layout:
    return layout.replace_elements(
        el for el in layout.elements if el.class_id != class_id
    )
