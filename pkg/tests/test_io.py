import io
import json

import numpy as np
import pytest

from doclayout.core import ClassSchema
from doclayout.errors import FormatError, ValidationError
from doclayout.io import (emit_jsonl, ingest_coco, ingest_jsonl, read_jsonl,
                          write_jsonl)
from doclayout.synthetic import two_column_corpus


def make_coco_doc(n_images=50, seed=3):
    """Synthetic annotation file in the shape real page datasets use."""
    rng = np.random.default_rng(seed)
    categories = [
        {"id": 1, "name": "text"},
        {"id": 2, "name": "title"},
        {"id": 3, "name": "list"},
        {"id": 4, "name": "table"},
        {"id": 5, "name": "figure"},
    ]
    images, annotations = [], []
    ann_id = 1
    for i in range(n_images):
        w, h = 612.0, 792.0
        images.append({"id": i + 1, "width": w, "height": h,
                       "file_name": f"page_{i:04d}.jpg"})
        for _ in range(int(rng.integers(2, 8))):
            bw = float(rng.uniform(30, 350))
            bh = float(rng.uniform(15, 300))
            x = float(rng.uniform(0, w - bw))
            y = float(rng.uniform(0, h - bh))
            annotations.append({
                "id": ann_id, "image_id": i + 1,
                "category_id": int(rng.integers(1, 6)),
                "bbox": [round(x, 2), round(y, 2), round(bw, 2), round(bh, 2)],
            })
            ann_id += 1
    return {"images": images, "annotations": annotations, "categories": categories}


class TestCocoIngest:
    def test_minimal_document(self):
        doc = {
            "images": [{"id": 7, "width": 100, "height": 200, "file_name": "a.jpg"}],
            "annotations": [
                {"id": 1, "image_id": 7, "category_id": 3, "bbox": [10, 20, 30, 40]}
            ],
            "categories": [{"id": 3, "name": "text"}],
        }
        layouts, stats = ingest_coco(doc)
        assert len(layouts) == 1
        assert layouts[0].elements[0].as_tuple() == (0, 10.0, 20.0, 30.0, 40.0)
        assert stats.dropped == 0 and stats.clipped == 0

    def test_degenerate_annotation_dropped(self):
        doc = {
            "images": [{"id": 1, "width": 100, "height": 100, "file_name": "a.jpg"}],
            "annotations": [
                {"id": 1, "image_id": 1, "category_id": 1, "bbox": [5, 5, 0, 40]}
            ],
            "categories": [{"id": 1, "name": "text"}],
        }
        layouts, stats = ingest_coco(doc)
        assert len(layouts[0]) == 0
        assert stats.dropped == 1

    def test_out_of_page_clipped(self):
        doc = {
            "images": [{"id": 1, "width": 100, "height": 100, "file_name": "a.jpg"}],
            "annotations": [
                {"id": 1, "image_id": 1, "category_id": 1, "bbox": [90, 90, 30, 30]}
            ],
            "categories": [{"id": 1, "name": "text"}],
        }
        layouts, stats = ingest_coco(doc)
        el = layouts[0].elements[0]
        assert (el.x, el.y, el.w, el.h) == (90.0, 90.0, 10.0, 10.0)
        assert stats.clipped == 1

    def test_missing_array_is_format_error(self):
        with pytest.raises(FormatError, match="categories"):
            ingest_coco({"images": [], "annotations": []})

    def test_fifty_image_subset_counts(self):
        doc = make_coco_doc(50)
        layouts, stats = ingest_coco(doc)
        assert len(layouts) == 50
        # independent JSON-walking recount of kept annotations per image
        expected = {img["id"]: 0 for img in doc["images"]}
        for ann in doc["annotations"]:
            x, y, w, h = ann["bbox"]
            img = next(i for i in doc["images"] if i["id"] == ann["image_id"])
            if w > 0 and h > 0 and min(x + w, img["width"]) - max(x, 0) > 0 \
                    and min(y + h, img["height"]) - max(y, 0) > 0:
                expected[ann["image_id"]] += 1
        for img, lay in zip(doc["images"], layouts):
            assert len(lay) == expected[img["id"]]
            for el in lay.elements:
                assert el.x >= 0 and el.y >= 0
                assert el.x + el.w <= lay.page_width
                assert el.y + el.h <= lay.page_height

    def test_annotation_order_preserved(self):
        doc = make_coco_doc(5, seed=9)
        layouts, _ = ingest_coco(doc)
        anns = [a for a in doc["annotations"] if a["image_id"] == 1]
        for ann, el in zip(anns, layouts[0].elements):
            assert el.x == ann["bbox"][0]

    def test_category_remap_is_dense_and_ordered(self):
        doc = make_coco_doc(3)
        layouts, _ = ingest_coco(doc)
        assert layouts[0].schema.names == ("text", "title", "list", "table", "figure")


class TestJsonl:
    def test_round_trip_byte_identical(self, schema):
        rng = np.random.default_rng(1)
        from conftest import random_layout
        layouts = [random_layout(rng, schema) for _ in range(100)]
        buf1 = io.StringIO()
        emit_jsonl(layouts, buf1)
        back = ingest_jsonl(io.StringIO(buf1.getvalue()))
        buf2 = io.StringIO()
        emit_jsonl(back, buf2)
        assert buf1.getvalue() == buf2.getvalue()

    def test_empty_file(self):
        assert ingest_jsonl(io.StringIO("")) == []

    def test_unknown_class_under_strict_schema(self):
        rec = {"page": [100, 100], "schema": ["mystery"], "boxes": [[0, 1, 1, 5, 5]]}
        strict = ClassSchema(("text", "title"))
        with pytest.raises(ValidationError, match="mystery"):
            ingest_jsonl(io.StringIO(json.dumps(rec) + "\n"), strict)

    def test_malformed_line_names_line_number(self):
        good = json.dumps({"page": [10, 10], "schema": ["a"], "boxes": []})
        with pytest.raises(FormatError, match="line 2"):
            ingest_jsonl(io.StringIO(good + "\n{oops\n"))

    def test_doc_id_survives(self, tmp_path):
        corpus = two_column_corpus(3, seed=0)
        corpus = [
            lay.replace_elements(lay.elements) for lay in corpus
        ]
        object.__setattr__(corpus[0], "doc_id", "page-x")
        path = tmp_path / "c.jsonl"
        write_jsonl(corpus, path)
        back = read_jsonl(path)
        assert back[0].doc_id == "page-x"
        assert back[1].doc_id is None
