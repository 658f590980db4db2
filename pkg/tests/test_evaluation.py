import numpy as np
import pytest

from fdnshash import attacks, desk, evaluation, imagecore
from fdnshash.attacks import AttackSpec
from fdnshash.errors import ConfigurationError, IncompatibleHashError
from fdnshash.evaluation import REJECTED, TemplateDb, classify
from fdnshash.fdns import FdnsParams, HashVector

SMALL = FdnsParams(canonical_w=64, canonical_h=64)
IDENTITY_GRID = [AttackSpec("rotation", 0), AttackSpec("scaling", 1), AttackSpec("brightness", 0)]


def textured(seed, shape=(48, 64)):
    rng = np.random.default_rng(seed)
    return imagecore.resize_bilinear(rng.uniform(0, 255, (12, 16)), shape[1], shape[0])


def _h(values, params=SMALL):
    return HashVector(np.asarray(values, float), params.fingerprint)


class TestBench:
    def test_identity_grid_is_perfect(self):
        corpus = {f"t{i}": textured(i) for i in range(3)}
        report = evaluation.robustness_bench(corpus, IDENTITY_GRID, SMALL)
        for row in report.rows:
            assert row.count == 3
            assert row.mean == pytest.approx(1.0, abs=1e-12)
        assert not report.skipped

    def test_constant_images(self):
        # both hashes are the zero vector, which the degenerate rule scores 1
        corpus = {"flat": np.full((40, 40), 90.0)}
        report = evaluation.robustness_bench(corpus, ["brightness:20", "gamma:1.25"], SMALL)
        assert [r.mean for r in report.rows] == [1.0, 1.0]

    def test_report_integrity(self):
        corpus = {f"t{i}": textured(i) for i in range(3)}
        grid = ["jpeg:50", "rotation:5", "saltpepper:0.01:1"]
        report = evaluation.robustness_bench(corpus, grid, SMALL, corpus_id="synthetic")
        assert [r.spec for r in report.rows] == ["jpeg:50", "rotation:5.0", "saltpepper:0.01:1"]
        for r in report.rows:
            assert [i for i, _ in r.correlations] == ["t0", "t1", "t2"]
            assert -1 <= r.min <= r.mean <= r.max <= 1
        back = evaluation.RobustnessReport.from_text(report.to_text())
        assert back.to_csv() == report.to_csv()
        assert back.corpus_id == "synthetic"

    def test_csv_layout(self):
        report = evaluation.robustness_bench({"a": textured(0)}, ["gamma:0.9"], SMALL)
        lines = report.to_csv().split("\n")
        assert lines[0].startswith("# algorithm=f-dns") and SMALL.fingerprint in lines[0]
        assert lines[1] == "kind,parameter,n,mean,min,max"
        assert lines[2].startswith("gamma,0.9,1,")

    def test_undecodable_file_is_skipped(self, tmp_path):
        (tmp_path / "bad.png").write_bytes(b"not an image")
        imagecore.save_image(textured(1), tmp_path / "good.png")
        corpus = {"bad": tmp_path / "bad.png", "good": tmp_path / "good.png"}
        report = evaluation.robustness_bench(corpus, IDENTITY_GRID, SMALL)
        assert [s.image_id for s in report.skipped] == ["bad"]
        assert all(r.count == 1 for r in report.rows)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            evaluation.robustness_bench({}, IDENTITY_GRID, SMALL)
        with pytest.raises(ConfigurationError):
            evaluation.robustness_bench({"a": textured(0)}, [], SMALL)

    def test_thread_count_does_not_change_results(self):
        corpus = {f"t{i}": textured(i) for i in range(4)}
        grid = ["speckle:0.01:3", "rotation:-5"]
        a = evaluation.robustness_bench(corpus, grid, SMALL, threads=1)
        b = evaluation.robustness_bench(corpus, grid, SMALL, threads=3)
        assert a.to_text() == b.to_text()


class TestClassify:
    def test_equal_hash(self):
        v = np.random.default_rng(0).normal(size=64)
        db = TemplateDb(SMALL.fingerprint)
        db.add("a", "a.png", _h(v))
        db.add("b", "b.png", _h(np.random.default_rng(1).normal(size=64)))
        label, score = classify(_h(v), db)
        assert label == "a" and score == pytest.approx(1.0)

    def test_single_template(self):
        db = TemplateDb(SMALL.fingerprint)
        db.add("only", "x", _h(np.arange(64.0)))
        assert classify(_h(np.random.default_rng(2).normal(size=64)), db)[0] == "only"

    def test_negated_loses_to_uncorrelated(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=64)
        other = rng.normal(size=64)
        other -= other.mean()
        hc = h - h.mean()
        other -= hc * (other @ hc) / (hc @ hc)  # exactly uncorrelated with h
        db = TemplateDb(SMALL.fingerprint)
        db.add("A", "neg", _h(-h))
        db.add("B", "orth", _h(other))
        label, score = classify(_h(h), db)
        assert label == "B" and abs(score) < 1e-9

    def test_tie_goes_to_smallest_label(self):
        v = np.arange(64.0)
        db = TemplateDb(SMALL.fingerprint)
        for label in ("zeta", "alpha", "mid"):
            db.add(label, label, _h(v))
        assert classify(_h(v), db)[0] == "alpha"

    def test_threshold(self):
        db = TemplateDb(SMALL.fingerprint)
        db.add("a", "a", _h(np.arange(64.0)))
        q = _h(np.random.default_rng(4).normal(size=64))
        label, score = classify(q, db, threshold=0.99)
        assert label is None and score < 0.99

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            classify(_h(np.arange(64.0)), TemplateDb(SMALL.fingerprint))
        db = TemplateDb(SMALL.fingerprint)
        db.add("a", "a", _h(np.arange(64.0)))
        with pytest.raises(IncompatibleHashError):
            classify(_h(np.arange(64.0), FdnsParams()), db)
        with pytest.raises(IncompatibleHashError):
            db.add("b", "b", _h(np.arange(64.0), FdnsParams()))


def labeled(n_per_class=4):
    return [(f"c{c}", f"c{c}_{i}", textured(c)) for c in range(3) for i in range(n_per_class)]


class TestClassificationEval:
    def test_identical_class_members(self):
        res = evaluation.classification_eval(labeled(), 1, repetitions=3, seed=0, params=SMALL)
        assert res.accuracies == [1.0, 1.0, 1.0]
        assert res.mean_accuracy == 1.0 and res.pooled_accuracy == 1.0
        # three classes, three scored images each, three repetitions
        assert sum(res.confusion.values()) == 27

    def test_templates_not_scored(self):
        res = evaluation.classification_eval(labeled(4), 2, repetitions=2, seed=5, params=SMALL)
        assert all(sum(c.values()) == 3 * 2 for c in res.per_repetition_confusion)

    def test_deterministic(self):
        corpus = [(f"c{c}", f"{c}_{i}", textured(10 * c + i)) for c in range(3) for i in range(4)]
        a = evaluation.classification_eval(corpus, 1, repetitions=4, seed=7, params=SMALL)
        b = evaluation.classification_eval(list(reversed(corpus)), 1, repetitions=4, seed=7, params=SMALL)
        assert a.to_text() == b.to_text()
        assert a.to_csv() == b.to_csv()

    def test_too_few_members(self):
        corpus = labeled(2)
        with pytest.raises(ConfigurationError, match="c0"):
            evaluation.classification_eval(corpus, 2, params=SMALL)
        with pytest.raises(ConfigurationError):
            evaluation.classification_eval([], 1, params=SMALL)

    def test_rejections_recorded(self):
        corpus = [(f"c{c}", f"{c}_{i}", textured(10 * c + i)) for c in range(2) for i in range(3)]
        res = evaluation.classification_eval(corpus, 1, repetitions=2, seed=1, params=SMALL, threshold=1.01)
        assert set(p for _, p in res.confusion) == {REJECTED}
        assert res.mean_accuracy == 0.0

    def test_affine_rescaling_keeps_predictions(self):
        # Pearson is invariant to positive affine maps of either argument
        rng = np.random.default_rng(9)
        corpus = [(f"c{c}", f"{c}_{i}", _h(rng.normal(size=64))) for c in range(3) for i in range(4)]
        scaled = [(lab, ident, _h(2.5 * h.values + 7.0)) for lab, ident, h in corpus]
        a = evaluation.classification_eval(corpus, 1, repetitions=5, seed=2, params=SMALL)
        b = evaluation.classification_eval(scaled, 1, repetitions=5, seed=2, params=SMALL)
        assert a.confusion == b.confusion

    def test_confusion_table(self):
        text = evaluation.confusion_table({("a", "a"): 3, ("a", "b"): 1, ("b", "b"): 2})
        rows = text.split("\n")
        assert len(rows) == 3
        assert rows[1].split() == ["a", "3", "1"]
        assert rows[2].split() == ["b", "0", "2"]


class TestTemplateDb:
    def test_build(self):
        db = evaluation.build_template_db(labeled(4), 2, seed=3, params=SMALL)
        assert len(db) == 6 and db.labels == ["c0", "c1", "c2"]
        again = evaluation.build_template_db(labeled(4), 2, seed=3, params=SMALL)
        assert [e.source for e in db.entries] == [e.source for e in again.entries]

    def test_class_too_small(self):
        with pytest.raises(ConfigurationError, match="c1"):
            evaluation.build_template_db([("c0", "a", textured(0)), ("c0", "b", textured(1)), ("c1", "c", textured(2))], 2, params=SMALL)


def test_list_images(tmp_path):
    (tmp_path / "b").mkdir()
    (tmp_path / "a").mkdir()
    for name in ("b/2.png", "b/1.JPG", "a/x.jpeg", "a/notes.txt"):
        (tmp_path / name).write_bytes(b"")
    assert [rel for rel, _ in evaluation.list_images(tmp_path)] == ["a/x.jpeg", "b/1.JPG", "b/2.png"]
    labels = [lab for lab, _, _ in evaluation.load_labeled_corpus(tmp_path)]
    assert labels == ["a", "b", "b"]
    with pytest.raises(FileNotFoundError):
        evaluation.list_images(tmp_path / "missing")


def test_small_rotation_beats_large_on_desk():
    corpus = desk.desk_corpus()
    report = evaluation.robustness_bench(corpus, ["rotation:1", "rotation:45"])
    assert report.row("rotation:1.0").mean > report.row("rotation:45.0").mean


def test_variants_deterministic():
    img = desk.template_families()["blog"]
    a = desk.variants(img, 3, seed=4)
    b = desk.variants(img, 3, seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(x.min() >= 0 and x.max() <= 255 for x in a)
    assert attacks.MILD_GRID
