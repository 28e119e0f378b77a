"""Benchmark harness: scoring, corpus builder, ingest, report plumbing."""

import numpy as np
import pytest

from driftlab.bench import (
    BANK,
    Exp3Config,
    build_meta_corpus,
    drift_f1,
    evaluate_detector,
    exp3,
    ingest_real_dataset,
    make_elec_like_stream,
    render_table,
    report_table,
    resolve_generator,
    run_experiment,
    write_report,
)
from driftlab.features import WindowSpec
from driftlab.naive_bayes import GaussianNaiveBayes, prequential_run
from driftlab.streams import generate_drifting_stream


class TestDriftF1:
    def test_no_detections_scores_zero(self):
        p, r, f1 = drift_f1([500], [], tolerance=100)
        assert (p, r, f1) == (0.0, 0.0, 0.0)

    def test_half_precision_full_recall(self):
        p, r, f1 = drift_f1([500], [505, 900], tolerance=100)
        assert p == 0.5
        assert r == 1.0
        assert f1 == pytest.approx(2 / 3)

    def test_perfect_match(self):
        assert drift_f1([100, 200], [95, 210], tolerance=20) == (1.0, 1.0, 1.0)

    def test_one_truth_claims_one_detection(self):
        # two detections near a single truth: one TP, one FP
        p, r, _ = drift_f1([500], [490, 510], tolerance=50)
        assert p == 0.5
        assert r == 1.0

    def test_order_invariance(self):
        truths, detections = [300, 700, 900], [905, 290, 710]
        forward = drift_f1(truths, detections, tolerance=30)
        shuffled = drift_f1(truths[::-1], detections[::-1], tolerance=30)
        assert forward == shuffled == (1.0, 1.0, 1.0)

    def test_tolerance_boundary_inclusive(self):
        _, r, _ = drift_f1([500], [550], tolerance=50)
        assert r == 1.0
        _, r, _ = drift_f1([500], [551], tolerance=50)
        assert r == 0.0

    def test_empty_truth_with_detections(self):
        p, r, f1 = drift_f1([], [100], tolerance=50)
        assert (p, r, f1) == (0.0, 0.0, 0.0)

    def test_negative_tolerance(self):
        with pytest.raises(ValueError, match="tolerance"):
            drift_f1([100], [100], tolerance=-1)


class TestBuildMetaCorpus:
    def test_counts_and_labels(self, tiny_spec):
        corpus = build_meta_corpus(tiny_spec, per_class=8, seed=3)
        assert len(corpus) == 32
        by_label = {}
        for s in corpus:
            by_label.setdefault(s.label, 0)
            by_label[s.label] += 1
            assert s.gaps.shape == (tiny_spec.L,)
        assert by_label == {"normal": 8, "sudden": 8, "gradual": 8,
                            "incremental": 8}

    def test_determinism(self, tiny_spec):
        a = build_meta_corpus(tiny_spec, per_class=5, seed=9)
        b = build_meta_corpus(tiny_spec, per_class=5, seed=9)
        for sa, sb in zip(a, b):
            assert sa.label == sb.label
            np.testing.assert_array_equal(sa.gaps, sb.gaps)

    def test_seed_changes_content(self, tiny_spec):
        a = build_meta_corpus(tiny_spec, per_class=5, seed=1)
        b = build_meta_corpus(tiny_spec, per_class=5, seed=2)
        assert any(not np.array_equal(sa.gaps, sb.gaps)
                   for sa, sb in zip(a, b))

    def test_per_class_validation(self, tiny_spec):
        with pytest.raises(ValueError, match="per_class"):
            build_meta_corpus(tiny_spec, per_class=0, seed=1)

    def test_classes_are_separable_in_gap_space(self, tiny_detector,
                                                tiny_spec):
        # the trained tiny detector must beat chance comfortably on a
        # fresh draw from the same simulator
        held_out = build_meta_corpus(tiny_spec, per_class=25, seed=321)
        scores = evaluate_detector(tiny_detector, held_out)
        assert scores["macro"] > 0.5
        assert set(scores["per_class"]) == {"normal", "sudden", "gradual",
                                            "incremental"}
        assert scores["n"] == 100


class TestResolveGenerator:
    def test_aliases(self):
        assert resolve_generator("hyp") == "hyperplane"
        assert resolve_generator("tree") == "rtg"
        assert resolve_generator("sea") == "sea"


class TestIngest:
    def test_csv_with_header_and_bad_rows(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(
            "alpha,beta,gamma,target\n"
            "1.0,2.0,x,yes\n"
            "2.0,oops,y,no\n"
            "3.0,4.0,x,yes\n"
            "5.0,6.0\n"
        )
        result = ingest_real_dataset(path)
        assert len(result.samples) == 2
        assert result.skipped == 2  # unparseable number + short row
        assert result.n_features == 3
        # categorical third column integer-encoded in first-seen order
        assert result.samples[0].features[2] == 0.0
        assert result.samples[0].label == 0
        assert result.samples[1].label == 0

    def test_arff(self, tmp_path):
        path = tmp_path / "data.arff"
        path.write_text(
            "% comment\n"
            "@relation toy\n"
            "@attribute f1 numeric\n"
            "@attribute class {a,b}\n"
            "@data\n"
            "1.5,a\n"
            "2.5,b\n"
        )
        result = ingest_real_dataset(path)
        assert len(result.samples) == 2
        assert result.samples[0].features[0] == 1.5
        assert {s.label for s in result.samples} == {0, 1}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("\n")
        with pytest.raises(ValueError, match="empty"):
            ingest_real_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest_real_dataset(tmp_path / "nope.csv")

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("1.0,yes\n2.0,no\n")
        with pytest.raises(ValueError, match="expected 5 samples"):
            ingest_real_dataset(path, schema={"samples": 5})
        with pytest.raises(ValueError, match="expected 3 features"):
            ingest_real_dataset(path, schema={"features": 3})


class TestElecLikeStream:
    def test_shape_and_determinism(self):
        a, drifts = make_elec_like_stream(length=3000, seed=4)
        b, _ = make_elec_like_stream(length=3000, seed=4)
        assert len(a) == 3000
        assert len(drifts) == 8
        assert all(d.position < 3000 for d in drifts)
        for sa, sb in zip(a, b):
            assert sa.label == sb.label
            np.testing.assert_array_equal(sa.features, sb.features)


class TestReportPlumbing:
    def test_render_table_layout(self):
        text = render_table([["a", "bb"], ["1", "2"]], title="t")
        lines = text.splitlines()
        assert lines[0] == "t"
        assert lines[1].startswith("a")
        assert set(lines[2]) == {"-"}
        assert text.endswith("\n")

    def test_write_report_bytes_depend_only_on_report(self, tmp_path):
        report = {"experiment": "exp2", "seed": 7,
                  "config": {"l_values": [50], "n_values": [1, 25],
                             "per_class_train": 5, "per_class_test": 2},
                  "grid": {"l=50": {"n=1": 0.25, "n=25": 0.5}}}
        j1, t1 = write_report(report, tmp_path / "a")
        j2, t2 = write_report(report, tmp_path / "b")
        assert j1.read_bytes() == j2.read_bytes()
        assert t1.read_bytes() == t2.read_bytes()
        assert "n=25" in t1.read_text()

    def test_run_experiment_unknown_id(self):
        with pytest.raises(ValueError, match="unknown experiment"):
            run_experiment("exp9")


@pytest.fixture(scope="module")
def smoke_report():
    cfg = Exp3Config(generators=("sea",), length=1500,
                     drift_positions=(500, 900, 1300),
                     n_seeds=2, l=20, n=5, budget=5, per_class_train=40)
    return exp3(seed=7, config=cfg,
                train_overrides={"episodes": 150, "patience": 50}), cfg


class TestExp3Smoke:
    def test_report_shape(self, smoke_report):
        report, cfg = smoke_report
        assert report["experiment"] == "exp3"
        assert set(report["regimes"]) == {"strong", "weak"}
        assert report["config"]["tolerance"] == 105 // 2
        for regime in report["regimes"].values():
            gens = regime["generators"]
            assert list(gens) == ["sea"]
            methods = gens["sea"]["methods"]
            assert set(methods) == set(BANK)
            for cell in methods.values():
                assert len(cell["per_seed"]["accuracy"]) == cfg.n_seeds
                assert 0.0 <= cell["accuracy"] <= 1.0

    def test_no_detector_row_has_no_f1(self, smoke_report):
        report, _ = smoke_report
        for regime in report["regimes"].values():
            cell = regime["generators"]["sea"]["methods"]["*"]
            assert cell["f1"] is None
            assert cell["dn"] == 0.0

    def test_no_detector_accuracy_matches_direct_run(self, smoke_report):
        report, cfg = smoke_report
        strong = report["regimes"]["strong"]
        drifts = cfg.drifts(strong["magnitude"])
        # stream seed formula: master * 10000 + generator_index * 100 + seed
        stream = generate_drifting_stream("sea", cfg.length, drifts,
                                          seed=7 * 10_000 + 0 * 100 + 0)
        _, accuracy = prequential_run(stream, GaussianNaiveBayes())
        cell = strong["generators"]["sea"]["methods"]["*"]
        assert cell["per_seed"]["accuracy"][0] == accuracy

    def test_table_renders_every_regime(self, smoke_report):
        report, _ = smoke_report
        text = report_table(report)
        assert "strong drifts, magnitude 0.8" in text
        assert "weak drifts, magnitude 0.55" in text
        assert "meta-active" in text


class TestExp3Config:
    def test_alias_resolution_happens_in_exp3(self):
        cfg = Exp3Config(generators=("hyp",))
        assert cfg.generators == ("hyp",)  # stored verbatim
        assert resolve_generator(cfg.generators[0]) == "hyperplane"

    def test_drifts_fit_stream(self):
        cfg = Exp3Config()
        for magnitude in cfg.regimes().values():
            drifts = cfg.drifts(magnitude)
            assert [d.position for d in drifts] == list(cfg.drift_positions)
            for d in drifts:
                d.check_fits(cfg.length)

    def test_spec_geometry(self):
        assert Exp3Config().spec() == WindowSpec(n=25, L=50)
