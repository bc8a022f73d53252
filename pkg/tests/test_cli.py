"""CLI contracts: exit codes, artifacts, config precedence, determinism."""

import hashlib
import json
from pathlib import Path

import pytest

from dermvlm.cli import dispatch


def run(capsys, *argv) -> tuple[int, str, str]:
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _tree_digest(root: Path) -> dict:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "run_manifest.json":
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_synth_data_contract(tmp_path, capsys):
    out = tmp_path / "corpus"
    code, stdout, _ = run(capsys, "synth-data", "--n", "6", "--seed", "7", "--out", str(out))
    assert code == 0
    payload = json.loads(stdout)
    assert payload["n_images"] == 6
    for name in ("manifest.json", "stage1.jsonl", "stage2.jsonl", "run_manifest.json"):
        assert (out / name).exists()
    assert len(list((out / "images").glob("*.png"))) == 6


def test_end_to_end_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "synth-data", "--n", "5", "--seed", "3", "--out", str(a))[0] == 0
    assert run(capsys, "synth-data", "--n", "5", "--seed", "3", "--out", str(b))[0] == 0
    assert _tree_digest(a) == _tree_digest(b)


def test_run_manifest_lifecycle(tmp_path, capsys):
    out = tmp_path / "corpus"
    run(capsys, "synth-data", "--n", "2", "--seed", "1", "--out", str(out))
    manifests = list(out.glob("run_manifest.json"))
    assert len(manifests) == 1
    doc = json.loads(manifests[0].read_text())
    assert doc["status"] == "ok"
    assert doc["subcommand"] == "synth-data"
    assert doc["started_at"] and doc["finished_at"]
    assert doc["tool_version"]


def test_invalid_stage_exits_1(tmp_path, capsys):
    corpus = tmp_path / "c"
    run(capsys, "synth-data", "--n", "2", "--seed", "1", "--out", str(corpus))
    code, _, err = run(
        capsys, "train", "--stage", "3", "--corpus", str(corpus), "--out", str(tmp_path / "t")
    )
    assert code == 1
    assert "1" in err and "2" in err  # names the valid stages


def test_unknown_subcommand_exits_1_with_usage(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    assert "usage" in err.lower()


def test_no_subcommand_exits_1(capsys):
    code, _, err = run(capsys)
    assert code == 1
    assert "synth-data" in err


def test_missing_required_option_exits_1(capsys):
    code, _, err = run(capsys, "synth-data", "--n", "2")
    assert code == 1
    assert "--out" in err


def test_config_file_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 4, "seed": 9}))
    out1 = tmp_path / "one"
    code, stdout, _ = run(capsys, "synth-data", "--config", str(cfg), "--out", str(out1))
    assert code == 0
    assert json.loads(stdout)["n_images"] == 4  # config beats default
    out2 = tmp_path / "two"
    code, stdout, _ = run(
        capsys, "synth-data", "--config", str(cfg), "--n", "2", "--out", str(out2)
    )
    assert json.loads(stdout)["n_images"] == 2  # flag beats config
    assert len(list((out2 / "images").glob("*.png"))) == 2


def test_train_generate_roundtrip(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    run(capsys, "synth-data", "--n", "6", "--seed", "2", "--out", str(corpus))
    train_out = tmp_path / "run"
    code, stdout, err = run(
        capsys,
        "train", "--stage", "1", "--corpus", str(corpus), "--out", str(train_out),
        "--desk-scale", "1", "4", "--warmup", "2", "--batch-size", "2",
        "--optimizer", "adam", "--lr", "0.001",
    )
    assert code == 0, err
    payload = json.loads(stdout)
    ckpt = Path(payload["checkpoint"])
    assert ckpt.exists()
    metrics = Path(payload["metrics"]).read_text().splitlines()
    assert metrics[0] == "step,lr,loss"
    assert len(metrics) == 5
    image = next((corpus / "images").glob("*.png"))
    code, stdout, err = run(
        capsys,
        "generate", "--checkpoint", str(ckpt), "--image", str(image),
        "--prompt-index", "1", "--max-new-tokens", "4",
    )
    assert code == 0, err
    assert "text" in json.loads(stdout)


def test_eval_aggregate_cli(tmp_path, capsys):
    from dermvlm.evaluation import EvalRecord, write_records_csv

    records = [
        EvalRecord("c1", "r1", {i: "strongly agree" for i in range(1, 8)}, 1.0),
        EvalRecord("c2", "r1", {i: "agree" for i in range(1, 8)}, 2.0),
    ]
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    out = tmp_path / "report.json"
    code, stdout, err = run(
        capsys, "eval", "aggregate", "--records", str(path), "--out", str(out)
    )
    assert code == 0, err
    report = json.loads(out.read_text())
    assert report["rating_count"] == 2
    assert report["items"][0]["positive_pct"] == "100.00"


def test_eval_probe_cli(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    run(capsys, "synth-data", "--n", "5", "--seed", "2", "--out", str(corpus))
    train_out = tmp_path / "run"
    run(
        capsys,
        "train", "--stage", "1", "--corpus", str(corpus), "--out", str(train_out),
        "--desk-scale", "1", "2", "--batch-size", "2",
    )
    code, stdout, err = run(
        capsys,
        "eval", "probe", "--checkpoint", str(train_out / "checkpoint_final.zip"),
        "--corpus", str(corpus), "--heldin", "3",
    )
    assert code == 0, err
    payload = json.loads(stdout)
    assert payload["n_cases"] == 3
    assert 0.0 <= payload["concept_recall"] <= 1.0


def test_missing_config_file_exits_1(tmp_path, capsys):
    code, _, err = run(
        capsys, "synth-data", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)
    )
    assert code == 1
    assert "config" in err.lower()
