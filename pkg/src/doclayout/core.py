"""Layout domain model and token serialization.

A layout is an ordered list of class-labelled boxes ``(c, x, y, w, h)`` on a
page. For sequence models the layout is flattened to
``BOS, c, x, y, w, h, c, x, y, w, h, ..., EOS, PAD*`` where geometry values
are quantized onto a ``|G|``-level grid and class labels are offset past the
geometry ids so every token lives in one dense vocabulary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import TokenStructureError, ValidationError

__all__ = [
    "ClassSchema",
    "LayoutElement",
    "Layout",
    "Vocabulary",
    "TokenSequence",
    "DequantReport",
    "quantize",
    "dequantize",
    "dequantize_with_report",
    "sort_reading_order",
]


@dataclass(frozen=True)
class ClassSchema:
    """Ordered, unique class names; ``K = len(names)``."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate class names in schema: {names}")
        if not names:
            raise ValidationError("schema needs at least one class")

    @property
    def K(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown class name {name!r}") from None


def generic_schema(K: int) -> ClassSchema:
    return ClassSchema(tuple(f"class{i}" for i in range(K)))


@dataclass(frozen=True)
class LayoutElement:
    """One box: class id plus upper-left corner and extent in page pixels.

    Coordinates are real-valued (COCO annotations ship fractional pixels);
    ``w`` and ``h`` must be strictly positive.
    """

    class_id: int
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValidationError(f"negative class id {self.class_id}")
        if not (self.w > 0 and self.h > 0):
            raise ValidationError(f"degenerate box w={self.w}, h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"negative position ({self.x}, {self.y})")
        for v in (self.x, self.y, self.w, self.h):
            if not math.isfinite(v):
                raise ValidationError("non-finite coordinate")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def as_tuple(self) -> tuple[int, float, float, float, float]:
        return (self.class_id, self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class Layout:
    """An ordered set of elements on a ``page_width x page_height`` canvas."""

    elements: tuple[LayoutElement, ...]
    page_width: float
    page_height: float
    schema: ClassSchema
    doc_id: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValidationError("page dimensions must be positive")
        tol = 1e-9 * max(self.page_width, self.page_height)
        for i, el in enumerate(self.elements):
            if el.class_id >= self.schema.K:
                raise ValidationError(
                    f"element {i}: class id {el.class_id} outside schema (K={self.schema.K})"
                )
            if el.x + el.w > self.page_width + tol or el.y + el.h > self.page_height + tol:
                raise ValidationError(
                    f"element {i} exceeds page bounds: "
                    f"({el.x},{el.y},{el.w},{el.h}) on {self.page_width}x{self.page_height}"
                )

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def page(self) -> tuple[float, float]:
        return (self.page_width, self.page_height)

    def boxes_of_class(self, class_id: int) -> tuple[LayoutElement, ...]:
        return tuple(el for el in self.elements if el.class_id == class_id)

    def present_classes(self) -> set[int]:
        return {el.class_id for el in self.elements}

    def replace_elements(self, elements: Iterable[LayoutElement]) -> "Layout":
        return Layout(tuple(elements), self.page_width, self.page_height,
                      self.schema, self.doc_id)


def sort_reading_order(layout: Layout) -> Layout:
    """Optional canonicalization: top-left lexicographic element order."""
    return layout.replace_elements(sorted(layout.elements, key=lambda e: (e.y, e.x)))


@dataclass(frozen=True)
class Vocabulary:
    """Dense token id space: geometry grid, then classes, then controls.

    ids ``[0, grid_size)`` are geometry levels, ``[grid_size, grid_size+K)``
    are classes, and the final three ids are BOS, EOS, PAD.
    """

    grid_size: int
    K: int

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValidationError("need at least two geometry levels")
        if self.K < 1:
            raise ValidationError("need at least one class")

    @property
    def size(self) -> int:
        return self.grid_size + self.K + 3

    @property
    def bos(self) -> int:
        return self.grid_size + self.K

    @property
    def eos(self) -> int:
        return self.grid_size + self.K + 1

    @property
    def pad(self) -> int:
        return self.grid_size + self.K + 2

    def class_token(self, class_id: int) -> int:
        if not 0 <= class_id < self.K:
            raise ValidationError(f"class id {class_id} outside [0, {self.K})")
        return self.grid_size + class_id

    def is_geometry(self, token: int) -> bool:
        return 0 <= token < self.grid_size

    def is_class(self, token: int) -> bool:
        return self.grid_size <= token < self.grid_size + self.K

    def token_class(self, token: int) -> int:
        return token - self.grid_size


@dataclass(frozen=True)
class TokenSequence:
    """Token ids plus the page dims needed to undo quantization.

    Sequences produced by :func:`quantize` follow the canonical frame
    ``BOS (class geo geo geo geo)* EOS PAD*``; sequences decoded from a
    generative model may violate it and are repaired by ``dequantize``.
    """

    tokens: tuple[int, ...]
    page: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def padded(self, length: int, vocab: Vocabulary) -> "TokenSequence":
        if len(self.tokens) > length:
            raise ValidationError(
                f"sequence of length {len(self.tokens)} does not fit in {length}"
            )
        pad = (vocab.pad,) * (length - len(self.tokens))
        return TokenSequence(self.tokens + pad, self.page)


@dataclass(frozen=True)
class DequantReport:
    """What structural repair had to do while decoding a token sequence."""

    dropped_groups: int = 0
    missing_eos: bool = False

    @property
    def clean(self) -> bool:
        return self.dropped_groups == 0 and not self.missing_eos


def _half_up(v: float) -> int:
    # round-to-nearest with ties up; v >= 0 here
    return int(math.floor(v + 0.5))


def quantize(layout: Layout, vocab: Vocabulary) -> TokenSequence:
    """Serialize a layout to tokens.

    Each coordinate maps to ``round(v / page_dim * (grid_size - 1))`` so the
    page extremes land exactly on grid levels 0 and ``grid_size - 1``.
    """
    if vocab.K < layout.schema.K:
        raise ValidationError(
            f"vocabulary has {vocab.K} classes, layout schema has {layout.schema.K}"
        )
    g1 = vocab.grid_size - 1
    pw, ph = layout.page
    tokens = [vocab.bos]
    for i, el in enumerate(layout.elements):
        if el.x + el.w > pw * (1 + 1e-9) or el.y + el.h > ph * (1 + 1e-9):
            raise ValidationError(f"element {i} out of page bounds")
        tokens.append(vocab.class_token(el.class_id))
        tokens.append(_half_up(el.x / pw * g1))
        tokens.append(_half_up(el.y / ph * g1))
        tokens.append(_half_up(el.w / pw * g1))
        tokens.append(_half_up(el.h / ph * g1))
    tokens.append(vocab.eos)
    return TokenSequence(tuple(tokens), (pw, ph))


def _decode_group(group: Sequence[int], vocab: Vocabulary,
                  pw: float, ph: float) -> LayoutElement | None:
    """Decode one 5-token group; ``None`` when it cannot form a legal box.

    Rounding during quantization may push ``x + w`` one grid step past the
    page edge; that overshoot is clipped rather than rejected (the resulting
    extent is still within half a cell of the original).
    """
    c, gx, gy, gw, gh = group
    if not vocab.is_class(c):
        return None
    if not all(vocab.is_geometry(t) for t in (gx, gy, gw, gh)):
        return None
    g1 = vocab.grid_size - 1
    if gw == 0 or gh == 0 or gx + gw > g1 + 1 or gy + gh > g1 + 1:
        return None
    x = gx / g1 * pw
    y = gy / g1 * ph
    w = min(gx + gw, g1) / g1 * pw - x
    h = min(gy + gh, g1) / g1 * ph - y
    if w <= 0 or h <= 0:
        return None
    return LayoutElement(vocab.token_class(c), x, y, w, h)


def dequantize_with_report(
    seq: TokenSequence,
    vocab: Vocabulary,
    schema: ClassSchema | None = None,
    page: tuple[float, float] | None = None,
    strict: bool = False,
) -> tuple[Layout, DequantReport]:
    """Invert :func:`quantize`, returning the layout and a repair report.

    In repair mode (default) malformed 5-token groups are dropped and
    counted; in strict mode any framing violation raises
    :class:`TokenStructureError`.
    """
    pw, ph = page if page is not None else seq.page
    schema = schema if schema is not None else generic_schema(vocab.K)
    toks = list(seq.tokens)

    dropped = 0
    missing_eos = False

    # strip leading BOS
    if toks and toks[0] == vocab.bos:
        body = toks[1:]
    elif strict:
        raise TokenStructureError("sequence does not start with BOS")
    else:
        body = toks

    # body runs until EOS (or first PAD / end of stream in repair mode)
    if vocab.eos in body:
        body = body[: body.index(vocab.eos)]
    else:
        if strict:
            raise TokenStructureError("missing EOS")
        missing_eos = True
        if vocab.pad in body:
            body = body[: body.index(vocab.pad)]

    if strict and len(body) % 5 != 0:
        raise TokenStructureError(f"body length {len(body)} is not a multiple of 5")

    elements = []
    i = 0
    while i < len(body):
        if not vocab.is_class(body[i]):
            # malformed slot: count one repair and resync on a class token
            if strict:
                raise TokenStructureError(f"expected class token at offset {i}")
            dropped += 1
            while i < len(body) and not vocab.is_class(body[i]):
                i += 1
            continue
        if i + 5 > len(body):
            if strict:
                raise TokenStructureError("trailing partial group")
            dropped += 1
            break
        el = _decode_group(body[i : i + 5], vocab, pw, ph)
        if el is None or el.class_id >= schema.K:
            if strict:
                raise TokenStructureError(f"malformed group at token offset {i}")
            dropped += 1
        else:
            elements.append(el)
        i += 5

    layout = Layout(tuple(elements), pw, ph, schema)
    return layout, DequantReport(dropped_groups=dropped, missing_eos=missing_eos)


def dequantize(
    seq: TokenSequence,
    vocab: Vocabulary,
    schema: ClassSchema | None = None,
    page: tuple[float, float] | None = None,
    strict: bool = False,
) -> Layout:
    layout, _ = dequantize_with_report(seq, vocab, schema, page, strict)
    return layout
