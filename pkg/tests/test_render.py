import xml.etree.ElementTree as ET

from doclayout.core import Layout, LayoutElement
from doclayout.render import layout_to_svg, save_corpus_svgs

SVG_NS = "{http://www.w3.org/2000/svg}"


def rects(svg_text, cls):
    root = ET.fromstring(svg_text)
    return [r for r in root.iter(f"{SVG_NS}rect") if r.get("class") == cls]


def test_empty_layout_is_page_only(schema):
    svg = layout_to_svg(Layout((), 800, 1000, schema))
    assert len(rects(svg, "box")) == 0
    assert len(rects(svg, "page")) == 1


def test_full_page_box_fills_viewbox(schema):
    lay = Layout((LayoutElement(0, 0.0, 0.0, 800.0, 1000.0),), 800, 1000, schema)
    svg = layout_to_svg(lay, legend=False)
    (box,) = rects(svg, "box")
    assert (box.get("x"), box.get("y")) == ("0", "0")
    assert (box.get("width"), box.get("height")) == ("800", "1000")
    root = ET.fromstring(svg)
    assert root.get("viewBox") == "0 0 800 1000"


def test_five_box_layout_round_trips_coordinates(schema, simple_layout):
    lay = simple_layout
    svg = layout_to_svg(lay)
    boxes = rects(svg, "box")
    assert len(boxes) == len(lay)
    for el, rect in zip(lay.elements, boxes):
        assert float(rect.get("x")) == el.x
        assert float(rect.get("y")) == el.y
        assert float(rect.get("width")) == el.w
        assert float(rect.get("height")) == el.h
        assert rect.get("data-class") == lay.schema.names[el.class_id]


def test_legend_lists_every_class(schema, simple_layout):
    svg = layout_to_svg(simple_layout)
    assert len(rects(svg, "legend")) == schema.K
    root = ET.fromstring(svg)
    texts = [t.text for t in root.iter(f"{SVG_NS}text")]
    assert texts == list(schema.names)


def test_color_mapping_deterministic(schema, simple_layout):
    assert layout_to_svg(simple_layout) == layout_to_svg(simple_layout)


def test_save_corpus(tmp_path, schema, simple_layout):
    paths = save_corpus_svgs([simple_layout] * 3, tmp_path / "out")
    assert len(paths) == 3
    assert all(p.exists() for p in paths)
