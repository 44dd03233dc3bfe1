import csv
import json

import pytest

from arn.cli import main
from arn.corpus import load_corpus, save_corpus
from conftest import FIGURE_SENTENCE, sentence

TINY_FLAGS = ["--word-dim", "4", "--pos-dim", "2", "--char-dim", "2", "--char-hidden", "2",
              "--hidden", "3", "--mlp-hidden", "4", "--conv-dim", "3"]


@pytest.fixture
def data(tmp_path):
    train, dev = tmp_path / "train.jsonl", tmp_path / "dev.jsonl"
    assert main(["gen", "--out", str(train), "--gen-sentences", "20", "--seed", "1"]) == 0
    assert main(["gen", "--out", str(dev), "--gen-sentences", "8", "--seed", "2"]) == 0
    return tmp_path, train, dev


@pytest.fixture
def checkpoint(data):
    tmp, train, dev = data
    ckpt = tmp / "model.json"
    code = main(["train", "--train", str(train), "--dev", str(dev), "--checkpoint", str(ckpt),
                 "--epochs", "2", "--log", str(tmp / "log.csv"), *TINY_FLAGS])
    assert code == 0
    return ckpt


class TestGen:
    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for p in (a, b):
            main(["gen", "--out", str(p), "--gen-sentences", "30", "--seed", "9"])
        assert a.read_bytes() == b.read_bytes()
        assert len(load_corpus(a)) == 30


class TestTrainPredictEval:
    def test_pipeline(self, data, checkpoint, capsys):
        tmp, train, dev = data
        rows = list(csv.DictReader(open(tmp / "log.csv")))
        assert len(rows) == 2
        pred = tmp / "pred.jsonl"
        assert main(["predict", "--checkpoint", str(checkpoint), "--input", str(dev), "--out", str(pred)]) == 0
        lines = [json.loads(l) for l in pred.read_text().splitlines()]
        assert len(lines) == 8
        for obj in lines:
            for m in obj["mentions"]:
                assert {"start", "end", "type", "anchor", "score"} <= set(m)
        capsys.readouterr()
        assert main(["eval", "--pred", str(pred), "--gold", str(dev)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        report = json.loads(out[-1])
        assert set(report) == {"true_positives", "predicted", "gold", "precision", "recall", "f1"}
        assert "F1" in "\n".join(out[:-1])

    def test_training_is_reproducible(self, data, tmp_path, monkeypatch):
        # same command line in two directories: checkpoints and logs match byte for byte
        _, train, dev = data
        outputs = []
        for name in ("a", "b"):
            run = tmp_path / name
            run.mkdir()
            monkeypatch.chdir(run)
            main(["train", "--train", str(train), "--dev", str(dev), "--checkpoint", "m.json",
                  "--log", "log.csv", "--epochs", "2", *TINY_FLAGS])
            outputs.append(((run / "m.json").read_bytes(), (run / "log.csv").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_parallel_predict_identical(self, data, checkpoint):
        tmp, _, dev = data
        a, b = tmp / "a.jsonl", tmp / "b.jsonl"
        main(["predict", "--checkpoint", str(checkpoint), "--input", str(dev), "--out", str(a)])
        main(["predict", "--checkpoint", str(checkpoint), "--input", str(dev), "--out", str(b), "--jobs", "2"])
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_and_flag_precedence(self, data, tmp_path):
        _, train, _ = data
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 1, "hidden": 2, "train": str(train),
                                   "checkpoint": str(tmp_path / "m.json")}))
        assert main(["train", "--config", str(cfg), "--hidden", "3", *TINY_FLAGS[:8]]) == 0
        saved = json.loads((tmp_path / "m.json").read_text())["config"]
        assert saved["epochs"] == 1 and saved["hidden"] == 3

    def test_predict_rejects_unknown_labels(self, data, checkpoint, tmp_path):
        other = tmp_path / "other.jsonl"
        save_corpus([sentence("a b", "DT NN", [(0, 1, "WEA")])], other)
        code = main(["predict", "--checkpoint", str(checkpoint), "--input", str(other),
                     "--out", str(tmp_path / "p.jsonl")])
        assert code == 2

    def test_inspect(self, data, checkpoint, capsys):
        _, _, dev = data
        assert main(["inspect", "--checkpoint", str(checkpoint), "--input", str(dev), "--top-n", "3"]) == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert all(len(v) <= 3 for v in report.values())


class TestExitCodes:
    def test_missing_required_path(self, tmp_path, capsys):
        assert main(["train", "--checkpoint", str(tmp_path / "m.json")]) == 1
        assert "train" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["train", "--train", str(tmp_path / "nope.jsonl"), "--checkpoint", "m.json"]) == 1

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alpah": 1}))
        assert main(["gen", "--out", str(tmp_path / "x"), "--config", str(cfg)]) == 1

    def test_invalid_value(self, tmp_path):
        assert main(["gen", "--out", str(tmp_path / "x"), "--alpha", "-1"]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 1

    def test_malformed_corpus(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"tokens": ["a"], "pos": ["DT"], "mentions": [{"start": 0, "end": 3, "type": "PER"}]}\n')
        assert main(["train", "--train", str(bad), "--checkpoint", str(tmp_path / "m.json")]) == 2

    def test_bad_checkpoint(self, tmp_path):
        ck = tmp_path / "m.json"
        ck.write_text("{}")
        save_corpus([FIGURE_SENTENCE], tmp_path / "c.jsonl")
        assert main(["predict", "--checkpoint", str(ck), "--input", str(tmp_path / "c.jsonl"),
                     "--out", str(tmp_path / "p")]) == 2

    def test_eval_token_mismatch(self, tmp_path, data):
        _, train, dev = data
        assert main(["eval", "--pred", str(dev), "--gold", str(train)]) == 2


class TestGradcheckSweep:
    def test_gradcheck_passes(self, capsys):
        assert main(["gradcheck"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["pass"] and out["max_relative_error"] < 1e-4

    def test_sweep_alpha(self, data, tmp_path):
        _, train, dev = data
        out = tmp_path / "sweep.csv"
        assert main(["sweep-alpha", "--train", str(train), "--dev", str(dev), "--alphas", "0,1",
                     "--epochs", "1", "--out", str(out), *TINY_FLAGS]) == 0
        rows = list(csv.DictReader(open(out)))
        assert [float(r["alpha"]) for r in rows] == [0.0, 1.0]
        assert all(0.0 <= float(r["dev_f1"]) <= 1.0 for r in rows)

    def test_single_alpha_matches_train(self, data, tmp_path, capsys):
        _, train, dev = data
        out = tmp_path / "sweep.csv"
        main(["sweep-alpha", "--train", str(train), "--dev", str(dev), "--alphas", "1",
              "--epochs", "2", "--out", str(out), *TINY_FLAGS])
        capsys.readouterr()
        main(["train", "--train", str(train), "--dev", str(dev), "--checkpoint", str(tmp_path / "m.json"),
              "--epochs", "2", *TINY_FLAGS])
        trained = json.loads(capsys.readouterr().out)
        row = next(csv.DictReader(open(out)))
        assert float(row["dev_f1"]) == trained["f1"]
