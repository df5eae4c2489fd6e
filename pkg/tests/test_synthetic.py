import numpy as np

from doclayout.metrics import overlap_pct
from doclayout.synthetic import (ARTICLE_SCHEMA, drop_class, random_layouts,
                                 shift_layout, two_column_corpus,
                                 uniform_random_corpus)


class TestTwoColumnCorpus:
    def test_deterministic(self):
        a = two_column_corpus(5, seed=42)
        b = two_column_corpus(5, seed=42)
        assert [l.elements for l in a] == [l.elements for l in b]

    def test_layouts_valid_and_nonoverlapping(self):
        for lay in two_column_corpus(30, seed=1):
            assert 5 <= len(lay) <= 11
            assert overlap_pct(lay) == 0.0
            titles = lay.boxes_of_class(ARTICLE_SCHEMA.index("title"))
            assert len(titles) == 1

    def test_fits_sequence_budget(self):
        # 11 boxes -> 57 tokens; everything fits in a 64-token frame
        assert max(len(l) for l in two_column_corpus(200, seed=2)) <= 11

    def test_text_dominates(self):
        corpus = two_column_corpus(50, seed=3)
        counts = np.zeros(ARTICLE_SCHEMA.K)
        for lay in corpus:
            for el in lay.elements:
                counts[el.class_id] += 1
        freq = counts / counts.sum()
        assert freq[ARTICLE_SCHEMA.index("text")] > 0.6
        assert freq[ARTICLE_SCHEMA.index("title")] > 0.05


class TestTransforms:
    def test_shift_preserves_count_when_clear_of_edges(self):
        lay = two_column_corpus(1, seed=5)[0]
        moved = shift_layout(lay, 0.05, 0.0)
        assert len(moved) == len(lay)
        for a, b in zip(lay.elements, moved.elements):
            assert b.x >= a.x

    def test_shift_clips_at_edge(self):
        lay = two_column_corpus(1, seed=6)[0]
        moved = shift_layout(lay, 0.5, 0.0)
        for el in moved.elements:
            assert el.x + el.w <= lay.page_width + 1e-9

    def test_drop_class(self):
        lay = two_column_corpus(1, seed=7)[0]
        cut = drop_class(lay, ARTICLE_SCHEMA.index("title"))
        assert len(cut) == len(lay) - 1
        assert ARTICLE_SCHEMA.index("title") not in cut.present_classes()


def test_uniform_random_corpus_shapes():
    corpus = uniform_random_corpus(10, seed=0)
    assert len(corpus) == 10
    assert all(3 <= len(l) <= 10 for l in corpus)


def test_random_layouts_controllable():
    corpus = random_layouts(10, seed=0, boxes=(2, 3), size_frac=(0.1, 0.15))
    for lay in corpus:
        assert 2 <= len(lay) <= 3
        for el in lay.elements:
            assert 0.1 * lay.page_width <= el.w <= 0.15 * lay.page_width + 1e-9
