import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from faqkit.cli import build_parser, main

SUBCOMMANDS = ["synth", "build-vocab", "tokenize-stats", "build-faq-dataset", "train-ranker",
               "eval-retrieval", "eval-sweep", "build-index", "bm25-search", "rerank", "fit-lsa",
               "train-sentiment", "cotrain-expand", "train-ner", "eval-ner", "quantize", "bench"]


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in SUBCOMMANDS:
        assert name in out


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_subcommand_help(name):
    with pytest.raises(SystemExit) as exc:
        main([name, "--help"])
    assert exc.value.code == 0


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["build-vocab", "--out", "x"])  # missing --corpus
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_configuration_error_exit_two(tmp_path):
    assert main(["synth", "faq", "--n", "5", "--threads", "0", "--out", str(tmp_path / "f")]) == 2
    assert not (tmp_path / "f").exists()


def test_missing_input_exit_one_and_no_artifacts(tmp_path, capsys):
    out = tmp_path / "vocab.txt"
    assert main(["build-vocab", "--corpus", str(tmp_path / "missing.txt"), "--out", str(out)]) == 1
    assert "input not found" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_malformed_data_exit_one(tmp_path):
    bad = tmp_path / "faq.jsonl"
    bad.write_text("{not json\n")
    assert main(["build-faq-dataset", "--faq", str(bad), "--out", str(tmp_path / "d")]) == 1
    assert not (tmp_path / "d").exists()


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "faqkit.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")

    def run(*args):
        assert main([*map(str, args), "--seed", "3"]) == 0, args

    run("synth", "faq", "--n", "60", "--out", d / "faq.jsonl")
    run("build-faq-dataset", "--faq", d / "faq.jsonl", "--m", "10", "--out", d / "data")
    run("train-ranker", "--data", d / "data" / "train.jsonl", "--lr", "1e-2", "--epochs", "2",
        "--n-components", "20", "--out", d / "pw.bin")
    run("eval-retrieval", "--model", d / "pw.bin", "--data", d / "data" / "test.jsonl", "--out", d / "eval.json")
    run("build-index", "--data", d / "faq.jsonl", "--out", d / "index")
    run("bm25-search", "--index", d / "index", "--query", "como cartao", "--k", "3", "--out", d / "hits.json")
    run("quantize", "--model", d / "pw.bin", "--out", d / "pw.q8")
    return d


def test_manifests_record_hashes(pipeline):
    d = pipeline
    man = json.loads((d / "pw.bin.manifest.json").read_text())
    assert man["command"] == "train-ranker"
    assert man["config"]["lr"] == 1e-2 and man["config"]["seed"] == 3
    assert man["inputs"][str(d / "data" / "train.jsonl")] == sha(d / "data" / "train.jsonl")
    assert man["outputs"][str(d / "pw.bin")] == sha(d / "pw.bin")
    assert str(d / "pw.bin.features") in man["outputs"]
    assert {"numpy", "faqkit", "python"} <= set(man["versions"])
    assert (d / "data" / "manifest.json").exists()
    for name in ("faq.jsonl", "eval.json", "hits.json", "pw.q8"):
        assert (d / (name + ".manifest.json")).exists()


def test_dataset_stats_and_eval(pipeline):
    d = pipeline
    stats = json.loads((d / "data" / "stats.json").read_text())
    assert stats["positive_fraction"] == pytest.approx(0.1)
    report = json.loads((d / "eval.json").read_text())
    assert set(report) == {"mrr@10", "ap@1", "n_queries"}
    assert 0 <= report["ap@1"] <= report["mrr@10"] <= 1


def test_search_output(pipeline, tmp_path):
    hits = json.loads((pipeline / "hits.json").read_text())
    assert hits["query"] == "como cartao" and len(hits["hits"]) == 3
    answer = json.loads((pipeline / "faq.jsonl").read_text().splitlines()[5])["answer"]
    out = tmp_path / "h.json"
    assert main(["bm25-search", "--index", str(pipeline / "index"), "--query", answer,
                 "--k", "1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["hits"][0]["doc_id"] == 5


def test_quantized_model_evaluates(pipeline, tmp_path):
    d = pipeline
    out = tmp_path / "q.json"
    assert main(["eval-retrieval", "--model", str(d / "pw.q8"), "--features", str(d / "pw.bin.features"),
                 "--data", str(d / "data" / "test.jsonl"), "--out", str(out)]) == 0
    full = json.loads((d / "eval.json").read_text())
    assert json.loads(out.read_text())["n_queries"] == full["n_queries"]


def test_eval_sweep_csv(pipeline, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["eval-sweep", "--faq", str(pipeline / "faq.jsonl"), "--cands", "5,10",
                 "--epochs", "1", "--lr", "1e-2", "--n-components", "10", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["m"]) for r in rows] == [5, 10]
    frac = [float(r["positive_fraction"]) for r in rows]
    np.testing.assert_allclose(frac, [0.2, 0.1])
    assert all(r["mrr"] and r["ap1"] for r in rows)


def test_bad_cands_is_configuration_error(pipeline, tmp_path):
    assert main(["eval-sweep", "--faq", str(pipeline / "faq.jsonl"), "--cands", "a,b",
                 "--out", str(tmp_path / "s.csv")]) == 2


def test_parser_defaults_follow_training_recipe():
    args = build_parser().parse_args(["train-ranker", "--data", "x", "--out", "y"])
    assert (args.lr, args.warmup, args.epochs, args.smoothing, args.margin, args.weight_decay) == \
        (5e-5, 0.02, 1, 0.1, 0.2, 0.01)
