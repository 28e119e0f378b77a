"""CLI subcommands end to end: files out, manifests, exit codes."""

import json

import numpy as np
import pytest

from driftlab.cli import main, read_config_file
from driftlab.features import read_corpus
from driftlab.proto import MetaDetector
from driftlab.streams import read_stream_csv


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def corpus_dir(tmp_path):
    out = tmp_path / "corpus"
    code = run("gen", "--kind", "meta-corpus", "--l", 20, "--n", 5,
               "--per-class", 30, "--seed", 11, "--out-dir", out)
    assert code == 0
    return out


@pytest.fixture()
def checkpoint(tmp_path, corpus_dir):
    out = tmp_path / "model"
    code = run("train", "--corpus", corpus_dir / "corpus.csv", "--n", 5,
               "--episodes", 200, "--nq", 10, "--seed", 11,
               "--out-dir", out)
    assert code == 0
    return out / "checkpoint.json"


class TestGen:
    def test_meta_corpus_outputs_and_manifest(self, corpus_dir):
        corpus = read_corpus(corpus_dir / "corpus.csv")
        assert len(corpus) == 120
        manifest = json.loads((corpus_dir / "manifest.json").read_text())
        assert manifest["command"] == "gen"
        assert manifest["seed"] == 11
        assert manifest["config"]["l"] == 20
        assert manifest["outputs"] == [str(corpus_dir / "corpus.csv")]
        assert manifest["started"] <= manifest["finished"]
        assert manifest["version"]

    def test_meta_corpus_requires_geometry(self, tmp_path, capsys):
        code = run("gen", "--kind", "meta-corpus", "--out-dir", tmp_path)
        assert code == 2
        assert "--l and --n" in capsys.readouterr().err

    def test_toy_stream_with_drift_metadata(self, tmp_path):
        out = tmp_path / "toy"
        code = run("gen", "--kind", "toy", "--generator", "hyp",
                   "--length", 400, "--drifts", 3, "--seed", 3,
                   "--out-dir", out)
        assert code == 0
        stream, meta = read_stream_csv(out / "hyperplane.csv")
        assert len(stream) == 400
        assert meta["generator"] == "hyperplane"
        assert [d["position"] for d in meta["drifts"]] == [100, 200, 300]
        assert all(d["kind"] == "sudden" for d in meta["drifts"])

    def test_determinism(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            run("gen", "--kind", "toy", "--length", 200, "--seed", 5,
                "--out-dir", out)
            outs.append((out / "sea.csv").read_bytes())
        assert outs[0] == outs[1]


class TestTrain:
    def test_checkpoint_and_losses(self, tmp_path, corpus_dir):
        out = tmp_path / "model"
        code = run("train", "--corpus", corpus_dir / "corpus.csv", "--n", 5,
                   "--episodes", 100, "--nq", 10, "--seed", 11,
                   "--out-dir", out)
        assert code == 0
        detector = MetaDetector.load(out / "checkpoint.json")
        assert detector.spec.n == 5
        assert detector.spec.L == 20
        assert detector.n_classes == 4
        losses = (out / "losses.csv").read_text().splitlines()
        assert losses[0] == "episode,loss"
        assert len(losses) >= 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["inputs"] == [str(corpus_dir / "corpus.csv")]

    def test_undersized_corpus_exits_one(self, tmp_path, corpus_dir, capsys):
        code = run("train", "--corpus", corpus_dir / "corpus.csv", "--n", 5,
                   "--episodes", 50, "--ns", 20, "--nq", 20,
                   "--out-dir", tmp_path / "m")
        assert code == 1
        assert "needs at least" in capsys.readouterr().err

    def test_missing_corpus_exits_one(self, tmp_path, capsys):
        code = run("train", "--corpus", tmp_path / "ghost.csv",
                   "--out-dir", tmp_path / "m")
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestDetect:
    def _toy(self, tmp_path, length=400):
        out = tmp_path / "toy"
        run("gen", "--kind", "toy", "--length", length, "--drifts", 1,
            "--magnitude", 0.9, "--seed", 6, "--out-dir", out)
        return out / "sea.csv"

    def test_stream_with_ground_truth_oracle(self, tmp_path, checkpoint):
        stream = self._toy(tmp_path)
        out = tmp_path / "run"
        code = run("detect", "--checkpoint", checkpoint, "--stream", stream,
                   "--oracle", "ground-truth", "--budget", 5,
                   "--out-dir", out)
        assert code == 0
        queries = [json.loads(line) for line in
                   (out / "queries.jsonl").read_text().splitlines()]
        assert len(queries) == 5
        assert all(q["status"] == "answered" for q in queries)
        alarms = (out / "alarms.csv").read_text().splitlines()
        assert alarms[0] == "timestamp,type,entropy"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "detect"
        assert str(checkpoint) in manifest["inputs"]

    def test_oracle_none_disables_queries(self, tmp_path, checkpoint):
        stream = self._toy(tmp_path)
        out = tmp_path / "run"
        code = run("detect", "--checkpoint", checkpoint, "--stream", stream,
                   "--oracle", "none", "--budget", 20, "--out-dir", out)
        assert code == 0
        assert (out / "queries.jsonl").read_text() == ""

    def test_budget_caps_queries(self, tmp_path, checkpoint):
        stream = self._toy(tmp_path)
        out = tmp_path / "run"
        run("detect", "--checkpoint", checkpoint, "--stream", stream,
            "--oracle", "ground-truth", "--budget", 2, "--out-dir", out)
        lines = (out / "queries.jsonl").read_text().splitlines()
        assert len(lines) == 2

    def test_trace_input(self, tmp_path, checkpoint):
        trace_path = tmp_path / "trace.txt"
        rng = np.random.default_rng(3)
        pre = (rng.random(200) < 0.1).astype(int)
        post = (rng.random(200) < 0.7).astype(int)
        trace_path.write_text(
            "\n".join(str(v) for v in np.concatenate([pre, post])) + "\n")
        out = tmp_path / "run"
        code = run("detect", "--checkpoint", checkpoint,
                   "--trace", trace_path, "--oracle", "none",
                   "--out-dir", out)
        assert code == 0
        assert (out / "alarms.csv").exists()

    def test_trace_and_stream_together_rejected(self, tmp_path, checkpoint,
                                                capsys):
        stream = self._toy(tmp_path)
        code = run("detect", "--checkpoint", checkpoint, "--stream", stream,
                   "--trace", stream, "--out-dir", tmp_path / "run")
        assert code == 1
        assert "exactly one" in capsys.readouterr().err

    def test_ground_truth_needs_drift_metadata(self, tmp_path, checkpoint,
                                               capsys):
        trace_path = tmp_path / "trace.txt"
        trace_path.write_text("\n".join("0" for _ in range(200)) + "\n")
        code = run("detect", "--checkpoint", checkpoint,
                   "--trace", trace_path, "--oracle", "ground-truth",
                   "--out-dir", tmp_path / "run")
        assert code == 1
        assert "drift metadata" in capsys.readouterr().err


class TestConfigFile:
    def test_parse_types_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# geometry\n"
            "l = 20\n"
            "per-class = 30  # dashes normalize\n"
            "kind = \"meta-corpus\"\n"
            "magnitude = 0.5\n"
        )
        cfg = read_config_file(path)
        assert cfg == {"l": 20, "per_class": 30, "kind": "meta-corpus",
                       "magnitude": 0.5}

    def test_bare_strings_pass_through(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("generator = sea\n")
        assert read_config_file(path) == {"generator": "sea"}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just-a-word\n")
        with pytest.raises(ValueError, match="key = value"):
            read_config_file(path)

    def test_config_supplies_defaults_flags_win(self, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("kind = meta-corpus\nl = 20\nn = 5\nper-class = 30\n"
                       "seed = 99\n")
        out = tmp_path / "out"
        code = run("--config", cfg, "gen", "--seed", 11, "--out-dir", out)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 11  # flag beats config
        assert manifest["config"]["per_class"] == 30  # config filled gap

    def test_unknown_config_key_exits_two(self, tmp_path, capsys):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("kind = meta-corpus\nwarp-speed = 9\n")
        with pytest.raises(SystemExit) as exc:
            run("--config", cfg, "gen", "--out-dir", tmp_path / "out")
        assert exc.value.code == 2
        assert "warp_speed" in capsys.readouterr().err


class TestBench:
    def test_exp3_subset_writes_report(self, tmp_path, monkeypatch):
        # keep it small: lean on the generators filter plus a tiny config
        # via monkeypatched defaults is overkill; exp3 with one generator
        # at full size is too slow for unit tests, so just check the
        # wiring with exp1 at reduced scale through run_experiment
        import driftlab.cli as cli_mod

        captured = {}

        def fake_run_experiment(exp_id, seed=7, **kwargs):
            captured["exp_id"] = exp_id
            captured["seed"] = seed
            captured["kwargs"] = kwargs
            return {"experiment": "exp2", "seed": seed,
                    "config": {"l_values": [50], "n_values": [1],
                               "per_class_train": 1, "per_class_test": 1},
                    "grid": {"l=50": {"n=1": 1.0}}}

        monkeypatch.setattr(cli_mod, "run_experiment", fake_run_experiment)
        out = tmp_path / "bench"
        code = run("bench", "exp3", "--generators", "sea,hyp",
                   "--seed", 3, "--out-dir", out)
        assert code == 0
        assert captured["exp_id"] == "exp3"
        assert captured["seed"] == 3
        assert captured["kwargs"]["config"].generators == ("sea", "hyp")
        assert (out / "exp2.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "bench exp3"
