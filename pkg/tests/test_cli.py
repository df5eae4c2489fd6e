import csv
import json

import pytest

from doclayout.cli import main
from doclayout.io import write_jsonl
from doclayout.synthetic import two_column_corpus, uniform_random_corpus

from test_io import make_coco_doc


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    train = root / "train.jsonl"
    ref = root / "ref.jsonl"
    write_jsonl(two_column_corpus(24, seed=1), train)
    write_jsonl(two_column_corpus(8, seed=2), ref)
    return root, train, ref


TRAIN_FLAGS = [
    "--max-steps", "3", "--T", "8", "--batch-size", "4", "--d", "16",
    "--max-len", "64", "--vocab-grid", "64",
]


@pytest.fixture(scope="module")
def checkpoint(corpora):
    root, train, _ = corpora
    ckpt = root / "model.npz"
    assert main(["train", str(train), "--out", str(ckpt), *TRAIN_FLAGS]) == 0
    assert ckpt.exists()
    assert ckpt.with_suffix(".loss.csv").exists()
    return ckpt


class TestIngest:
    def test_coco_to_jsonl(self, tmp_path):
        src = tmp_path / "coco.json"
        src.write_text(json.dumps(make_coco_doc(5)))
        out = tmp_path / "out.jsonl"
        assert main(["ingest", str(src), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_missing_input_exits_2(self, tmp_path):
        assert main(["ingest", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o.jsonl")]) == 2

    def test_bad_json_exits_3(self, tmp_path):
        src = tmp_path / "bad.json"
        src.write_text("{not json")
        assert main(["ingest", str(src), "--out", str(tmp_path / "o.jsonl")]) == 3


class TestGenerate:
    def test_count_one_gives_one_line(self, corpora, checkpoint, tmp_path):
        out = tmp_path / "one.jsonl"
        assert main(["generate", str(checkpoint), "--count", "1",
                     "--out", str(out), "--seed", "3"]) == 0
        assert len(out.read_text().splitlines()) == 1
        stats = json.loads((tmp_path / "one.jsonl.stats.json").read_text())
        assert stats["seed"] == 3 and stats["count"] == 1

    def test_same_seed_identical_files(self, corpora, checkpoint, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["generate", str(checkpoint), "--count", "4",
                         "--out", str(out), "--seed", "7"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestEval:
    def test_self_eval_and_golden_columns(self, corpora, tmp_path):
        _, train, ref = corpora
        out = tmp_path / "report"
        assert main(["eval", str(ref), str(ref), "--out", str(out),
                     "--grid", "16"]) == 0
        with open(out.with_suffix(".csv")) as fp:
            rows = list(csv.reader(fp))
        assert rows[0] == ["docsim", "doc_emd", "overlap_pct", "coverage_pct"]
        values = dict(zip(rows[0], map(float, rows[1])))
        assert values["doc_emd"] == pytest.approx(0.0, abs=1e-9)
        assert values["docsim"] > 0
        payload = json.loads(out.with_suffix(".json").read_text())
        assert payload["config"]["seed"] == 0
        assert payload["wasserstein_class"] == 0.0

    def test_cross_eval_with_pairs_dump(self, corpora, tmp_path):
        _, train, ref = corpora
        out = tmp_path / "x"
        assert main(["eval", str(train), str(ref), "--out", str(out),
                     "--grid", "16", "--dump-pairs"]) == 0
        pairs = out.with_suffix(".pairs.csv").read_text().splitlines()
        assert len(pairs) == 1 + 24 * 8

    def test_empty_corpus_exits_2(self, corpora, tmp_path):
        _, train, _ = corpora
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert main(["eval", str(train), str(empty),
                     "--out", str(tmp_path / "r")]) == 2


class TestRender:
    def test_renders_svgs(self, corpora, tmp_path):
        _, train, _ = corpora
        out = tmp_path / "svgs"
        assert main(["render", str(train), "--out", str(out)]) == 0
        assert len(list(out.glob("*.svg"))) == 24


class TestMosaicPlan:
    def test_plan_written(self, corpora, tmp_path):
        _, train, ref = corpora
        out = tmp_path / "plan.json"
        assert main(["mosaic-plan", str(ref), str(train), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["seed"] == 0
        assert all(e["matched"] for e in doc["entries"])


class TestAblate:
    def test_single_cell_grid(self, corpora, tmp_path):
        _, train, ref = corpora
        out = tmp_path / "ablation.csv"
        assert main([
            "ablate", str(train), "--reference", str(ref), "--out", str(out),
            "--lr", "1e-3", "--steps", "8", "--max-steps", "3",
            "--batch-size", "4", "--d", "16", "--max-len", "64",
            "--vocab-grid", "64", "--grid", "16", "--count", "4",
        ]) == 0
        with open(out) as fp:
            rows = list(csv.reader(fp))
        assert rows[0][:2] == ["lr", "steps"]
        assert len(rows) == 2

    def test_rows_sorted_by_lr_then_steps(self, corpora, tmp_path):
        _, train, ref = corpora
        out = tmp_path / "ablation2.csv"
        assert main([
            "ablate", str(train), "--reference", str(ref), "--out", str(out),
            "--lr", "2e-3,1e-3", "--steps", "16,8", "--max-steps", "2",
            "--batch-size", "4", "--d", "16", "--max-len", "64",
            "--vocab-grid", "64", "--grid", "16", "--count", "2",
        ]) == 0
        with open(out) as fp:
            rows = list(csv.reader(fp))[1:]
        keys = [(float(r[0]), int(r[1])) for r in rows]
        assert keys == sorted(keys)
