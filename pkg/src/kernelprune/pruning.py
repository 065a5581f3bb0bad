"""Configuration-subset selection and the relative-performance score.

A Selection is an ordered subset of matrix columns. Every strategy reduces
the training matrix to representative row vectors, maps each representative
to its best column (argmax, lowest index on ties), de-duplicates preserving
first occurrence, and optionally backfills from the top-count ranking until
the budget is met.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import clustering, decomposition
from .dataset import KernelConfig, PerformanceMatrix
from .errors import DataError

METHODS = ("top-count", "kmeans", "pca-kmeans", "hdbscan", "decision-tree")


class EmptySelection(DataError):
    pass


@dataclass(frozen=True)
class Selection:
    method: str
    budget: int
    seed: int
    config_indices: tuple[int, ...]


@dataclass(frozen=True)
class Score:
    geomean_relative_performance: float  # in (0, 1]

    @property
    def percent(self) -> float:
        return 100.0 * self.geomean_relative_performance

    def formatted(self) -> str:
        return f"{self.percent:.2f}"


@dataclass
class PruneOptions:
    restarts: int = 10
    pca_variance_threshold: float = 0.90
    min_cluster_size: int = 3
    min_samples: int = 2
    backfill: bool = True
    features: np.ndarray | None = field(default=None, repr=False)  # decision-tree only


def _geomean(values: np.ndarray) -> float:
    return float(np.exp(np.log(values).mean()))


def evaluate_selection(selection: Selection, matrix: PerformanceMatrix) -> Score:
    """Geometric mean over rows of the best selected column's value."""
    idx = list(selection.config_indices)
    if not idx:
        raise EmptySelection("selection has no configs")
    c = matrix.values.shape[1]
    if any(not 0 <= j < c for j in idx):
        raise DataError(f"selection index out of range for {c} configs")
    achieved = matrix.values[:, idx].max(axis=1)
    return Score(_geomean(achieved))


def top_count_order(values: np.ndarray) -> list[int]:
    """All columns ranked by how often they are a row's argmax, then index."""
    winners = values.argmax(axis=1)
    counts = np.bincount(winners, minlength=values.shape[1])
    return sorted(range(values.shape[1]), key=lambda j: (-int(counts[j]), j))


def representatives_to_selection(representatives, train: PerformanceMatrix,
                                 method: str, budget: int, seed: int,
                                 backfill: bool = True) -> Selection:
    """argmax each representative, dedupe, optionally backfill to budget."""
    reps = np.atleast_2d(np.asarray(representatives, dtype=np.float64))
    if reps.shape[1] != train.values.shape[1]:
        raise DataError("representative width does not match config count")
    picked: list[int] = []
    for rep in reps:
        j = int(rep.argmax())
        if j not in picked:
            picked.append(j)
    picked = picked[:budget]
    limit = min(budget, train.values.shape[1])
    if backfill and len(picked) < limit:
        for j in top_count_order(train.values):
            if j not in picked:
                picked.append(j)
                if len(picked) == limit:
                    break
    return Selection(method, budget, seed, tuple(picked))


def prune(method: str, train: PerformanceMatrix, budget: int, seed: int,
          options: PruneOptions | None = None) -> Selection:
    """Select up to ``budget`` columns of the training matrix.

    decision-tree needs per-problem features in options.features (raw m,k,n
    rows; only the induced partition matters, so no scaling is applied).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    opts = options or PruneOptions()
    values = train.values
    p = values.shape[0]

    if method == "top-count":
        picked = tuple(top_count_order(values)[:budget])
        return Selection(method, budget, seed, picked)

    if method == "kmeans":
        result = clustering.kmeans(values, min(budget, p), seed, restarts=opts.restarts)
        reps = result.centroids
    elif method == "pca-kmeans":
        model = decomposition.pca_fit(
            values, decomposition.full_spectrum_size(*values.shape))
        r = decomposition.components_for_threshold(model, opts.pca_variance_threshold)
        reduced = decomposition.truncate(model, r)
        scores = decomposition.project(reduced, values)
        result = clustering.kmeans(scores, min(budget, p), seed, restarts=opts.restarts)
        reps = decomposition.reconstruct_scores(reduced, result.centroids)
    elif method == "hdbscan":
        result = clustering.hdbscan(values, opts.min_cluster_size, opts.min_samples)
        ranked = sorted(range(len(result.cluster_medoids)),
                        key=lambda i: (-result.stabilities[i], i))[:budget]
        reps = values[[result.cluster_medoids[i] for i in ranked]]
    else:  # decision-tree
        if opts.features is None:
            raise DataError("decision-tree pruning requires per-problem features")
        tree = clustering.fit_regression_tree(opts.features, values, max_leaves=budget)
        reps = np.stack([leaf.value for leaf in clustering.tree_leaves(tree)])

    return representatives_to_selection(reps, train, method, budget, seed,
                                        backfill=opts.backfill)


def problem_feature_rows(problems) -> np.ndarray:
    """Raw (m, k, n) rows for the regression-tree strategy."""
    return np.array([[p.m, p.k, p.n] for p in problems], dtype=np.float64)


# --------------------------------------------------------- serialization

def selection_to_json(selection: Selection, configs) -> str:
    doc = {
        "method": selection.method,
        "budget": selection.budget,
        "seed": selection.seed,
        "configs": [
            {"acc": c.acc, "row_tile": c.row_tile, "col_tile": c.col_tile,
             "wg_rows": c.wg_rows, "wg_cols": c.wg_cols}
            for c in (configs[j] for j in selection.config_indices)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_selection(selection: Selection, configs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(selection_to_json(selection, configs))


def selection_from_json(text: str, configs) -> Selection:
    try:
        doc = json.loads(text)
        method = doc["method"]
        budget = int(doc["budget"])
        seed = int(doc["seed"])
        raw = doc["configs"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad selection document: {exc}")
    index_of = {c: j for j, c in enumerate(configs)}
    indices = []
    for entry in raw:
        cfg = KernelConfig(int(entry["acc"]), int(entry["row_tile"]),
                           int(entry["col_tile"]), int(entry["wg_rows"]),
                           int(entry["wg_cols"]))
        if cfg not in index_of:
            raise DataError(f"selection config {cfg.as_tuple()} not present in matrix")
        indices.append(index_of[cfg])
    return Selection(method, budget, seed, tuple(indices))


def load_selection(path, configs) -> Selection:
    with open(path, encoding="utf-8") as fh:
        return selection_from_json(fh.read(), configs)
