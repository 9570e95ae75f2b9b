import json

import pytest

from passage_as2 import config as config_mod
from passage_as2.cli import main
from passage_as2.config import ConfigError
from passage_as2.corpus import read_jsonl, write_jsonl

TINY = {"encoder": {"d_model": 8, "n_heads": 2, "n_layers": 1, "d_ff": 16},
        "train": {"epochs": 1, "easi_epochs": 1, "fuse_epochs": 1, "max_seq_len": 96, "batch_size": 32}}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Raw corpus, built corpus and one model per role, shared by the tests below."""
    root = tmp_path_factory.mktemp("ws")
    assert main(["gen-synthetic", "--n-questions", "12", "--seed", "3", "--out-dir", str(root / "raw")]) == 0
    assert main(["build-corpus", "--in-dir", str(root / "raw"), "--out-dir", str(root / "corpus"),
                 "--seed", "3"]) == 0
    cfg = {"seed": 3, "data": {"corpus_dir": str(root / "corpus")}, **TINY,
           "pipeline": {"pr_model": str(root / "m_pr"), "easi_model": str(root / "m_easi"),
                        "sentence_model": str(root / "m_sent")}}
    (root / "cfg.json").write_text(json.dumps(cfg))
    for mode, out in (("pr", "m_pr"), ("easi", "m_easi"), ("sentence", "m_sent")):
        assert main(["train", "--config", str(root / "cfg.json"), "--set", f"train.mode={mode}",
                     "--set", f"train.out_dir={root / out}"]) == 0
    return root


def run_eval(ws, mode, out, *extra):
    return main(["eval", "--config", str(ws / "cfg.json"), "--set", f"pipeline.mode={mode}",
                 "--set", f"eval.out_dir={ws / out}", *extra])


class TestCommands:
    def test_metrics_byte_identical(self, workspace):
        assert run_eval(workspace, "peasi_top1", "e1") == 0
        assert run_eval(workspace, "peasi_top1", "e1_again", "--set", f"eval.out_dir={workspace / 'e1'}") == 0
        first = (workspace / "e1" / "metrics.json").read_bytes()
        assert run_eval(workspace, "peasi_top1", "e1") == 0
        assert (workspace / "e1" / "metrics.json").read_bytes() == first
        m = json.loads(first)
        assert {"mode", "passage_group", "split", "p_at_1", "map", "mrr", "n_questions", "config",
                "format_version"} <= set(m)
        assert m["config"]["seed"] == 3

    def test_train_rerun_identical(self, workspace):
        args = ["train", "--config", str(workspace / "cfg.json"), "--set", "train.mode=pr"]
        assert main(args + ["--set", f"train.out_dir={workspace / 'r1'}"]) == 0
        assert main(args + ["--set", f"train.out_dir={workspace / 'r2'}"]) == 0
        a = json.loads((workspace / "r1" / "metrics.json").read_text())
        b = json.loads((workspace / "r2" / "metrics.json").read_text())
        a["config"]["train"].pop("out_dir"), b["config"]["train"].pop("out_dir")
        assert a == b
        assert (workspace / "r1" / "checkpoint.json").read_bytes() == (workspace / "r2" / "checkpoint.json").read_bytes()

    def test_cost_report_counts(self, workspace, capsys):
        assert run_eval(workspace, "peasi_top1", "e2") == 0
        logs = list(read_jsonl(workspace / "e2" / "run_log.jsonl"))
        answers = list(read_jsonl(workspace / "e2" / "answers.jsonl"))
        assert [a["predictions"] for a in answers] == [r["predictions"] for r in logs]
        assert all(r["predictions"] == r["components"]["pr"] + 1 for r in logs)
        assert main(["cost-report", "--config", str(workspace / "cfg.json"), "--run-log",
                     str(workspace / "e2" / "run_log.jsonl"), "--set", f"eval.out_dir={workspace / 'cost'}"]) == 0
        rep = json.loads((workspace / "cost" / "cost_report.json").read_text())
        rows = {r["mode"]: r for r in rep["rows"]}
        mean_pr = sum(r["components"]["pr"] for r in logs) / len(logs)
        assert rows["PEASI:ALL"]["predictions"] == pytest.approx(mean_pr + 1)
        assert "PEASI:PR" in capsys.readouterr().out

    def test_as2_single_sentence(self, workspace, tmp_path):
        raw = tmp_path / "raw"
        write_jsonl(raw / "documents.jsonl", [{"doc_id": "d", "title": "t", "body": "Only one here."}])
        write_jsonl(raw / "questions.jsonl", [{"question_id": "q", "text": "Which one?"}])
        write_jsonl(raw / "qa_labels.jsonl", [{"question_id": "q", "doc_id": "d", "sent_id": "d#0",
                                                "text": "Only one here.", "label": "positive"}])
        assert main(["build-corpus", "--in-dir", str(raw), "--out-dir", str(tmp_path / "c"), "--seed", "0"]) == 0
        assert main(["eval", "--config", str(workspace / "cfg.json"), "--set", "pipeline.mode=as2",
                     "--set", "eval.split=train", "--set", f"data.corpus_dir={tmp_path / 'c'}",
                     "--set", f"eval.out_dir={tmp_path / 'e'}"]) == 0
        m = json.loads((tmp_path / "e" / "metrics.json").read_text())
        (ans,) = read_jsonl(tmp_path / "e" / "answers.jsonl")
        assert m["p_at_1"] in (0.0, 1.0) and m["n_questions"] == 1 and ans["predictions"] == 1

    def test_validation_exit_codes(self, workspace, capsys):
        cfg = str(workspace / "cfg.json")
        assert main(["train", "--config", cfg, "--set", "train.lr=-1"]) == 2
        assert main(["train", "--config", cfg, "--set", "train.nope=1"]) == 2
        assert "train.nope" in capsys.readouterr().err
        assert main(["eval", "--config", cfg, "--set", f"pipeline.pr_model={workspace / 'missing'}"]) == 2
        assert main(["build-corpus", "--in-dir", str(workspace / "none"), "--out-dir", "x", "--seed", "0"]) == 2
        assert main(["gen-synthetic", "--seed", "1", "--out-dir", str(workspace / "g"), "--n-questions", "0"]) == 2
        with pytest.raises(SystemExit) as exc:
            main(["train", "--bogus-flag"])
        assert exc.value.code == 2


class TestRunConfig:
    def test_defaults_and_seed_required(self):
        cfg = config_mod.from_dict({"seed": 4})
        assert cfg.train.mode == "pr" and cfg.pipeline.top_n == 5 and cfg.pipeline.costs["pr"] == 10.9
        assert cfg.train_config().seed == 4
        with pytest.raises(ConfigError, match="seed"):
            config_mod.from_dict({})

    @pytest.mark.parametrize("raw,path", [
        ({"seed": 1, "extra": {}}, "extra"),
        ({"seed": 1, "train": {"lrr": 1}}, "train.lrr"),
        ({"seed": 1, "train": {"mode": "big"}}, "train.mode"),
        ({"seed": 1, "encoder": {"d_model": "wide"}}, "encoder.d_model"),
        ({"seed": 1, "encoder": {"d_model": 10, "n_heads": 3}}, "encoder.n_heads"),
        ({"seed": 1, "pipeline": {"costs": {"pr": -2}}}, "pipeline.costs.pr"),
        ({"seed": 1, "eval": {"split": "holdout"}}, "eval.split"),
        ({"seed": True}, "seed"),
    ])
    def test_errors_name_field_path(self, raw, path):
        with pytest.raises(ConfigError) as exc:
            config_mod.from_dict(raw)
        assert exc.value.path == path

    def test_snapshot_roundtrip(self):
        cfg = config_mod.from_dict({"seed": 2, "eval": {"run_logs": ["a.jsonl"]}, "train": {"lr": 1}})
        assert config_mod.from_dict(json.loads(cfg.to_json())) == cfg
