import json
import subprocess
import sys

import pytest

from augmenta.cli import main
from augmenta.corpus import load_dataset, write_dataset
from augmenta.evalharness import parse_report_csv, render_report


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("AUGMENTA_BACKEND_CONFIG", raising=False)
    return tmp_path


def put(path, obj):
    path.write_text(json.dumps(obj, ensure_ascii=False) if not isinstance(obj, str) else obj, encoding="utf-8")
    return str(path)


def test_preprocess_happy_path(workdir, capsys):
    put(workdir / "raw.tsv", "text\tlabel\nनमस्कार #मराठी https://t.co/x abc!\t1\nonly latin\t0\nजग\t2\n")
    assert main(["preprocess", "--in", "raw.tsv", "--out", "clean.tsv"]) == 0
    assert (workdir / "clean.tsv").read_text(encoding="utf-8") == "text\tlabel\nनमस्कार मराठी\t1\nजग\t2\n"
    manifest = json.loads((workdir / "clean.tsv.manifest.json").read_text(encoding="utf-8"))
    assert manifest["subcommand"] == "preprocess"
    assert manifest["argv"] == ["preprocess", "--in", "raw.tsv", "--out", "clean.tsv"]
    assert "kept=2 dropped=1" in capsys.readouterr().out


def test_unknown_flag_exit_1(workdir, capsys):
    assert main(["preprocess", "--in", "a", "--out", "b", "--bogus"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "--bogus" in err


def test_unknown_subcommand_exit_1(workdir, capsys):
    assert main(["frobnicate"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_augment_missing_backend_config(workdir, capsys):
    put(workdir / "d.tsv", "text\tlabel\nअ ब\t1\n")
    assert main(["augment", "--method", "random-mask-par", "--in", "d.tsv", "--out", "o.tsv"]) == 1
    assert "--backend-config" in capsys.readouterr().err


def test_augment_env_default_and_summary(workdir, capsys, monkeypatch):
    put(workdir / "d.tsv", "text\tlabel\nअ ब क\t1\nड\t0\n")
    monkeypatch.setenv("AUGMENTA_BACKEND_CONFIG", put(workdir / "fm.json", {"kind": "echo-fillmask"}))
    assert main(["augment", "--method", "random-mask-seq", "--in", "d.tsv", "--out", "o.tsv", "--no-keep-original"]) == 0
    assert "augmented=2 skipped=0" in capsys.readouterr().out
    ds = load_dataset(workdir / "o.tsv")
    assert ds.texts == ["अ ब क", "ड"] and {e.source for e in ds} == {"random-mask-seq"}


def test_augment_ner_backend_set(workdir):
    put(workdir / "d.tsv", "text\tlabel\nराम मुंबई गेला\t1\n")
    cfg = {"backends": {"ner": {"kind": "lexicon-ner", "table": {"राम": "Person"}}, "fillmask": {"kind": "constant-fillmask", "word": "श्याम"}}}
    put(workdir / "b.json", cfg)
    assert main(["augment", "--method", "ner-mask-par", "--backend-config", "b.json", "--in", "d.tsv", "--out", "o.jsonl"]) == 0
    assert load_dataset(workdir / "o.jsonl").texts == ["राम मुंबई गेला", "श्याम मुंबई गेला"]


def test_backend_unavailable_exit_2(workdir, monkeypatch, capsys):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    put(workdir / "d.tsv", "text\tlabel\nअ\t1\n")
    put(workdir / "hf.json", {"kind": "hf-fillmask", "model_id": "no-such-org/no-such-model-xyz"})
    assert main(["augment", "--method", "random-mask-par", "--backend-config", "hf.json", "--in", "d.tsv", "--out", "o.tsv"]) == 2
    assert "backend error" in capsys.readouterr().err


def test_bad_label_exit_1(workdir, capsys):
    put(workdir / "d.tsv", "text\tlabel\nअ\t5\n")
    assert main(["preprocess", "--in", "d.tsv", "--out", "o.tsv"]) == 1
    assert "d.tsv:2" in capsys.readouterr().err


def test_pseudolabel_and_training_manifest(workdir, capsys):
    put(workdir / "s.txt", "अ छान\nब\n")
    put(workdir / "c.json", {"kind": "keyword-classifier", "keywords": {"छान": 1}, "default": 2})
    rc = main(["pseudolabel", "--classifier-config", "c.json", "--in", "s.txt", "--out", "pl.tsv", "--training-manifest", "train.jsonl"])
    assert rc == 0
    assert (workdir / "pl.tsv").read_text(encoding="utf-8") == "text\tlabel\tsource\nअ छान\t1\tbert-pseudo\nब\t2\tbert-pseudo\n"
    row = json.loads((workdir / "train.jsonl").read_text(encoding="utf-8"))
    assert row == {"stage": "bert-pseudo", "dataset_path": "pl.tsv", "base_checkpoint_tag": "l3cube-pune/marathi-bert-v2"}


def test_pseudolabel_wrong_role(workdir, capsys):
    put(workdir / "s.txt", "अ\n")
    put(workdir / "c.json", {"kind": "echo-fillmask"})
    assert main(["pseudolabel", "--classifier-config", "c.json", "--in", "s.txt", "--out", "pl.tsv"]) == 1


def test_complete(workdir, capsys):
    put(workdir / "d.tsv", "text\tlabel\nअ ब क ड\t0\nइ\t1\n")
    put(workdir / "g.json", {"kind": "suffix-completer", "suffixes": {"0": " वाईट", "1": " छान"}})
    assert main(["complete", "--generator-config", "g.json", "--in", "d.tsv", "--out", "c.tsv"]) == 0
    ds = load_dataset(workdir / "c.tsv")
    assert ds.texts == ["अ ब क ड", "इ", "अ ब वाईट", "इ छान"]
    assert ds.labels == [0, 1, 0, 1]
    assert "generated=2 skipped=0" in capsys.readouterr().out


def test_evaluate_with_classifier_and_predictions(workdir, capsys):
    put(workdir / "gold.tsv", "text\tlabel\na\t0\nb\t1\nc\t2\nd\t1\n")
    put(workdir / "c.json", {"kind": "constant-classifier", "label": 1})
    assert main(["evaluate", "--classifier-config", "c.json", "--gold", "gold.tsv", "--report", "r.csv", "--model-tag", "const"]) == 0
    rep = parse_report_csv((workdir / "r.csv").read_text(encoding="utf-8"))
    assert rep.entries[0].confusion.counts == ((0, 1, 0), (0, 2, 0), (0, 1, 0))
    assert "accuracy=0.5000 evaluated=4 skipped=0" in capsys.readouterr().out

    put(workdir / "p.tsv", "id\tpredicted\n0\t0\n1\t1\n3\t2\n")
    assert main(["evaluate", "--predictions", "p.tsv", "--gold", "gold.tsv", "--report", "r.md"]) == 0
    md = (workdir / "r.md").read_text(encoding="utf-8")
    assert "evaluated=3 skipped=1 accuracy=0.6667" in md


def test_report_merge_single_and_conflict(workdir, capsys):
    header = "model,train_domain,eval_domain,split,accuracy\n"
    put(workdir / "a.csv", header + "Base Model,mahasent,mahasent,test,0.8367\n")
    put(workdir / "b.csv", header + "Base Model,goemotions,mahasent,test,0.6882\n")
    put(workdir / "c.csv", header + "Base Model,mahasent,mahasent,test,0.8400\n")

    assert main(["report", "a.csv", "--out", "single.md"]) == 0
    single = parse_report_csv((workdir / "a.csv").read_text(encoding="utf-8"))
    assert (workdir / "single.md").read_text(encoding="utf-8") == render_report(single, "markdown")

    assert main(["report", "a.csv", "b.csv", "--out", "m.md"]) == 0
    merged = (workdir / "m.md").read_text(encoding="utf-8")
    assert "0.8367" in merged and "0.6882" in merged

    assert main(["report", "a.csv", "c.csv"]) == 1
    err = capsys.readouterr().err
    assert "0.8367" in err and "0.8400" in err


def test_rerun_from_manifest(workdir):
    put(workdir / "d.tsv", "text\tlabel\nअ ब क ड इ\t1\nक ख ग\t0\n")
    put(workdir / "fm.json", {"kind": "neighbor-fillmask"})
    argv = ["augment", "--method", "random-mask-seq", "--backend-config", "fm.json", "--in", "d.tsv", "--out", "o.tsv", "--seed", "3"]
    assert main(argv) == 0
    first = (workdir / "o.tsv").read_bytes()
    (workdir / "o.tsv").unlink()
    assert main(["rerun", "o.tsv.manifest.json"]) == 0
    assert (workdir / "o.tsv").read_bytes() == first


def test_console_script_entry_point(workdir):
    put(workdir / "raw.tsv", "text\tlabel\nनमस्कार!\t1\n")
    proc = subprocess.run(
        [sys.executable, "-m", "augmenta", "preprocess", "--in", "raw.tsv", "--out", "c.tsv"],
        capture_output=True, text=True, cwd=workdir,
    )
    assert proc.returncode == 0, proc.stderr
    assert load_dataset(workdir / "c.tsv").texts == ["नमस्कार"]
