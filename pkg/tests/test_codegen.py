import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelprune import codegen
from kernelprune.codegen import (InvalidIdentifier, emit_reference_predictions,
                                 emit_selector_source, export_tree,
                                 load_reference_predictions, parity_grid,
                                 smallest_raw_threshold, traverse_document)
from kernelprune.dataset import ProblemSize
from kernelprune.errors import DataError
from kernelprune.pruning import prune
from kernelprune.selector_models import (FeatureScaler, NotATree, make_labels,
                                         predict, scaled_dim, train_model)


def _tree_model(split, budget=5, seed=3):
    sel = prune("top-count", split.train, budget, seed=seed)
    labeled = make_labels(split.train, sel)
    return train_model("decision-tree", labeled, seed=seed)


@given(st.floats(-30.0, 30.0), st.integers(0, 2),
       st.floats(0.5, 8.0), st.floats(-4.0, 12.0))
@settings(max_examples=120)
def test_smallest_raw_threshold_is_tight(threshold, feature, std, mean):
    scaler = FeatureScaler(np.full(3, mean), np.full(3, std),
                           np.zeros(3, dtype=bool))
    v = smallest_raw_threshold(scaler, feature, threshold)
    if v >= codegen.RAW_THRESHOLD_CAP:
        return  # threshold beyond any practical dimension
    assert scaled_dim(scaler, feature, v) >= threshold
    if v > 1:
        assert scaled_dim(scaler, feature, v - 1) < threshold


def test_document_matches_predictions(small_split):
    model = _tree_model(small_split)
    doc = export_tree(model)
    grid = [ProblemSize(m, k, n)
            for m in (1, 2, 3, 5, 31, 32, 33, 1000, 4096)
            for k in (1, 7, 64, 500)
            for n in (1, 9, 128, 2047)]
    for p in grid:
        assert traverse_document(doc, p.m, p.k, p.n) == predict(model, p)


def test_constant_model_exports_single_leaf(small_split):
    sel = prune("top-count", small_split.train, 1, seed=0)
    labeled = make_labels(small_split.train, sel)
    model = train_model("decision-tree", labeled, seed=0)
    doc = export_tree(model)
    assert set(doc) == {"config"}
    cfg = traverse_document(doc, 1, 1, 1)
    assert cfg == model.configs[0]


def test_non_tree_models_refuse_export(small_split):
    sel = prune("top-count", small_split.train, 4, seed=1)
    labeled = make_labels(small_split.train, sel)
    model = train_model("knn1", labeled, seed=1)
    with pytest.raises(NotATree):
        export_tree(model)


def test_emitted_source_structure(small_split):
    model = _tree_model(small_split)
    doc = export_tree(model)
    src = emit_selector_source(doc, "pick_config")
    assert src.startswith("#ifndef PICK_CONFIG_H")
    assert "#include <stdint.h>" in src
    assert "typedef struct {" in src
    assert "static inline pick_config_config pick_config(int64_t m, int64_t k, int64_t n)" in src
    assert src.count("return out;") >= 2
    assert "INT64_C(" in src


def test_emit_rejects_bad_identifiers(small_split):
    doc = export_tree(_tree_model(small_split))
    for symbol in ("", "9lives", "has-dash", "a b", "semi;colon"):
        with pytest.raises(InvalidIdentifier):
            emit_selector_source(doc, symbol)


def test_document_validation_errors():
    with pytest.raises(DataError):
        codegen._check_document({"feature": "m", "left": {}, "right": {}})
    with pytest.raises(DataError):
        codegen._check_document({"feature": "q", "raw_threshold": 4,
                                 "left": {"config": {}}, "right": {"config": {}}})
    with pytest.raises(DataError):
        codegen._check_document({"config": {"acc": 1}})


def test_document_json_round_trip(tmp_path, small_split):
    doc = export_tree(_tree_model(small_split))
    path = tmp_path / "doc.json"
    codegen.save_document(doc, path)
    assert codegen.load_document(path) == doc


def test_parity_grid_shape():
    grid = parity_grid()
    assert len(grid) == 22 ** 3
    assert len(grid) >= 10_000
    assert len(set((p.m, p.k, p.n) for p in grid)) == len(grid)
    assert all(p.m >= 1 and p.k >= 1 and p.n >= 1 for p in grid)


def test_reference_predictions_round_trip(tmp_path, small_split):
    doc = export_tree(_tree_model(small_split))
    problems = parity_grid()[:50]
    text = emit_reference_predictions(doc, problems)
    lines = text.strip().split("\n")
    assert lines[0] == "m,k,n,acc,row_tile,col_tile,wg_rows,wg_cols"
    assert len(lines) == 51
    path = tmp_path / "pred.csv"
    path.write_text(text)
    rows = load_reference_predictions(path)
    assert len(rows) == 50
    for problem, config in rows:
        assert traverse_document(doc, problem.m, problem.k, problem.n) == config


def test_reference_predictions_reject_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("m,k,n,acc\n1,2,3,4\n")
    with pytest.raises(DataError):
        load_reference_predictions(path)
    path.write_text("m,k,n,acc,row_tile,col_tile,wg_rows,wg_cols\n1,2,3,4,5\n")
    with pytest.raises(DataError):
        load_reference_predictions(path)
