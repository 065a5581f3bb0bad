import json

import pytest

from kernelprune.cli import main

from conftest import CANONICAL_SPEC_PATH


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def bench_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "bench.csv"
    assert run("synth", "--count", "20", "--seed", "5", "--out", str(path)) == 0
    return path


def test_synth_validate_round_trip(bench_csv):
    assert run("validate", "--data", str(bench_csv)) == 0


def test_synth_from_spec_file(tmp_path):
    out = tmp_path / "canon.csv"
    spec = json.loads(CANONICAL_SPEC_PATH.read_text())
    spec["problems"] = spec["problems"][:4]
    small = tmp_path / "spec.json"
    small.write_text(json.dumps(spec))
    assert run("synth", "--spec", str(small), "--out", str(out)) == 0
    assert run("validate", "--data", str(out)) == 0


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("synth", "--count", "8", "--seed", "3", "--out", str(a))
    run("synth", "--count", "8", "--seed", "3", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_missing_file_exits_2(tmp_path, capsys):
    assert run("validate", "--data", str(tmp_path / "nope.csv")) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_corrupt_data_exits_2(tmp_path, bench_csv, capsys):
    lines = bench_csv.read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[:1] + ["1,2,3,9,9,9,9,9,1.0,1.0"] + lines[1:]) + "\n")
    assert run("validate", "--data", str(bad)) == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_incomplete_grid_exits_2_and_drop_flag_recovers(tmp_path, bench_csv):
    lines = bench_csv.read_text().splitlines()
    clipped = tmp_path / "clipped.csv"
    clipped.write_text("\n".join(lines[:-5]) + "\n")  # drop 5 cells of last problem
    assert run("validate", "--data", str(clipped)) == 2
    assert run("validate", "--data", str(clipped), "--drop-incomplete") == 0


def test_usage_errors_exit_1(tmp_path, bench_csv, capsys):
    assert run() == 1
    assert run("unknown-command") == 1
    assert run("prune", "--data", str(bench_csv), "--method", "sorcery",
               "--budget", "4", "--out", str(tmp_path / "s.json")) == 1
    assert "sorcery" in capsys.readouterr().err
    assert run("synth", "--count", "4") == 1  # missing --out
    assert run("evaluate", "--data", str(bench_csv)) == 1  # neither target
    assert run("codegen", "--model", "whatever.json") == 1  # no outputs


def test_prune_budget_contract(tmp_path, bench_csv):
    out = tmp_path / "sel.json"
    assert run("prune", "--data", str(bench_csv), "--method", "decision-tree",
               "--budget", "8", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["method"] == "decision-tree"
    assert len(doc["configs"]) <= 8


def test_full_flow_train_evaluate_codegen(tmp_path, bench_csv, capsys):
    sel = tmp_path / "sel.json"
    model = tmp_path / "model.json"
    header = tmp_path / "sel.h"
    preds = tmp_path / "preds.csv"
    assert run("prune", "--data", str(bench_csv), "--method", "kmeans",
               "--budget", "5", "--out", str(sel)) == 0
    assert run("evaluate", "--data", str(bench_csv), "--selection", str(sel)) == 0
    assert run("train", "--data", str(bench_csv), "--selection", str(sel),
               "--kind", "decision-tree", "--out", str(model)) == 0
    assert run("evaluate", "--data", str(bench_csv), "--model", str(model)) == 0
    out = capsys.readouterr().out
    assert out.count("score ") == 2
    assert run("codegen", "--model", str(model), "--header", str(header),
               "--predictions", str(preds)) == 0
    assert "static inline" in header.read_text()
    assert preds.read_text().count("\n") == 22 ** 3 + 1


def test_codegen_rejects_non_tree_model(tmp_path, bench_csv):
    sel = tmp_path / "sel.json"
    model = tmp_path / "knn.json"
    run("prune", "--data", str(bench_csv), "--method", "top-count",
        "--budget", "4", "--out", str(sel))
    run("train", "--data", str(bench_csv), "--selection", str(sel),
        "--kind", "knn1", "--out", str(model))
    assert run("codegen", "--model", str(model), "--header",
               str(tmp_path / "x.h")) == 2


def test_report_writes_selected_tables(tmp_path, bench_csv):
    out_dir = tmp_path / "report"
    assert run("report", "--data", str(bench_csv), "--out-dir", str(out_dir),
               "--curves", "--budgets", "3,5",
               "--methods", "top-count,kmeans") == 0
    files = sorted(f.name for f in out_dir.iterdir())
    assert files == ["curves.csv"]
    lines = (out_dir / "curves.csv").read_text().splitlines()
    assert lines[0] == "method,budget,score"
    assert len(lines) == 1 + 2 * 2


def test_report_writes_all_tables_by_default(tmp_path, bench_csv):
    out_dir = tmp_path / "full"
    assert run("report", "--data", str(bench_csv), "--out-dir", str(out_dir),
               "--budgets", "4", "--methods", "top-count",
               "--kinds", "decision-tree,knn1", "--epochs", "5",
               "--trees", "5") == 0
    files = sorted(f.name for f in out_dir.iterdir())
    assert files == ["classifiers.csv", "counts.csv", "curves.csv", "variance.csv"]
    classifier_lines = (out_dir / "classifiers.csv").read_text().splitlines()
    assert classifier_lines[0] == "budget,method,model,score"
    models = [line.split(",")[2] for line in classifier_lines[1:]]
    assert models == ["max-achievable", "decision-tree", "knn1"]
    counts = (out_dir / "counts.csv").read_text().splitlines()
    assert counts[0] == "acc,row_tile,col_tile,wg_rows,wg_cols,count"
