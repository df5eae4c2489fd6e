import numpy as np
import pytest

from doclayout.core import ClassSchema, Layout, LayoutElement, Vocabulary


@pytest.fixture
def schema():
    return ClassSchema(("text", "title", "list", "figure", "table"))


@pytest.fixture
def vocab(schema):
    return Vocabulary(128, schema.K)


@pytest.fixture
def simple_layout(schema):
    return Layout(
        (
            LayoutElement(1, 100.0, 50.0, 400.0, 60.0),
            LayoutElement(0, 80.0, 150.0, 300.0, 500.0),
            LayoutElement(0, 420.0, 150.0, 300.0, 500.0),
            LayoutElement(3, 80.0, 700.0, 640.0, 300.0),
        ),
        800.0,
        1050.0,
        schema,
    )


def random_layout(rng: np.random.Generator, schema, page=(800.0, 1000.0),
                  boxes=(2, 6), size=(0.08, 0.25)) -> Layout:
    pw, ph = page
    k = int(rng.integers(boxes[0], boxes[1] + 1))
    els = []
    for _ in range(k):
        w = rng.uniform(*size) * pw
        h = rng.uniform(*size) * ph
        x = rng.uniform(0, pw - w)
        y = rng.uniform(0, ph - h)
        els.append(LayoutElement(int(rng.integers(0, schema.K)), x, y, w, h))
    return Layout(tuple(els), pw, ph, schema)
