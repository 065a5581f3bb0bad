"""Plot-ready CSV tables: optimal-config counts, score-vs-budget curves,
cumulative variance, and the pruning-method x classifier grid.

Everything returns CSV text with a trailing newline; the CLI owns file paths.
Scores are percentages formatted to two decimals, which is coarse enough to
be stable and fine enough for the tables these feed.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from . import decomposition
from .dataset import DataSplit, PerformanceMatrix
from .pruning import (METHODS, PruneOptions, evaluate_selection,
                      problem_feature_rows, prune)
from .selector_models import (MODEL_KINDS, evaluate_model, make_labels,
                              train_model)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def optimal_counts(matrix: PerformanceMatrix) -> list[tuple[int, int]]:
    """(config column, win count) for every column that wins at least one row,
    sorted by count descending then canonical order."""
    winners = matrix.values.argmax(axis=1)
    counts = np.bincount(winners, minlength=matrix.values.shape[1])
    present = [j for j in range(len(counts)) if counts[j] > 0]
    present.sort(key=lambda j: (-int(counts[j]), j))
    return [(j, int(counts[j])) for j in present]


def counts_csv(matrix: PerformanceMatrix) -> str:
    rows = []
    for j, count in optimal_counts(matrix):
        c = matrix.configs[j]
        rows.append((c.acc, c.row_tile, c.col_tile, c.wg_rows, c.wg_cols, count))
    return _csv_text(("acc", "row_tile", "col_tile", "wg_rows", "wg_cols", "count"),
                     rows)


def default_prune_options(train: PerformanceMatrix) -> PruneOptions:
    return PruneOptions(features=problem_feature_rows(train.problems))


def curves_csv(split: DataSplit, budgets, methods=METHODS,
               options: PruneOptions | None = None) -> str:
    """Test-split achievable score per (method, budget)."""
    opts = options or default_prune_options(split.train)
    rows = []
    for method in methods:
        for budget in budgets:
            selection = prune(method, split.train, budget, split.seed, opts)
            score = evaluate_selection(selection, split.test)
            rows.append((method, budget, score.formatted()))
    return _csv_text(("method", "budget", "score"), rows)


def variance_csv(matrix: PerformanceMatrix) -> str:
    """Cumulative explained variance (percent) per retained component count."""
    model = decomposition.pca_fit(
        matrix.values, decomposition.full_spectrum_size(*matrix.values.shape))
    cumulative = np.cumsum(model.explained_variance_ratio)
    rows = [(r + 1, f"{100.0 * cumulative[r]:.2f}") for r in range(len(cumulative))]
    return _csv_text(("components", "cumulative_variance"), rows)


def classifiers_csv(split: DataSplit, budgets, method: str = "decision-tree",
                    kinds=MODEL_KINDS, options: PruneOptions | None = None,
                    epochs: int = 100, trees: int = 100) -> str:
    """Table of test scores: the selection ceiling plus each trained model."""
    opts = options or default_prune_options(split.train)
    rows = []
    for budget in budgets:
        selection = prune(method, split.train, budget, split.seed, opts)
        ceiling = evaluate_selection(selection, split.test)
        rows.append((budget, method, "max-achievable", ceiling.formatted()))
        labeled = make_labels(split.train, selection)
        for kind in kinds:
            model = train_model(kind, labeled, split.seed,
                                epochs=epochs, trees=trees)
            score = evaluate_model(model, split.test)
            rows.append((budget, method, kind, score.formatted()))
    return _csv_text(("budget", "method", "model", "score"), rows)
