"""PCA over performance-matrix rows (problems as points, configs as axes)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatch


class UnreachableVariance(DataError):
    pass


@dataclass
class PcaModel:
    mean: np.ndarray                       # (C,) column means
    components: np.ndarray                 # (r, C) orthonormal rows
    singular_values: np.ndarray            # (r,)
    explained_variance_ratio: np.ndarray   # (r,) fractions of total variance


def full_spectrum_size(p: int, c: int) -> int:
    """Number of meaningful singular values after row-mean centering."""
    return min(p - 1, c)


def pca_fit(matrix: np.ndarray, n_components: int) -> PcaModel:
    """SVD-based PCA of the row-centered matrix.

    Variance ratios are always taken against the full min(P-1, C) spectrum,
    whatever n_components is retained. Sign convention: the largest-magnitude
    entry of each component is made positive (first index wins ties).
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("matrix must be 2-D")
    p, c = x.shape
    if p < 2:
        raise DataError("PCA needs at least 2 rows")
    if not 1 <= n_components <= min(p, c):
        raise ValueError(f"n_components must be in [1, {min(p, c)}], got {n_components}")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    spectrum = s[:full_spectrum_size(p, c)]
    denom = float((spectrum**2).sum())
    components = vt[:n_components].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0.0:
            row *= -1.0
    sv = s[:n_components].copy()
    if denom > 0.0:
        ratios = sv**2 / denom
    else:
        ratios = np.zeros(n_components)  # constant matrix: no variance at all
    return PcaModel(mean, components, sv, ratios)


def truncate(model: PcaModel, r: int) -> PcaModel:
    """View of the leading r components; r = 0 reduces to the column means."""
    if not 0 <= r <= len(model.components):
        raise ValueError(f"r must be in [0, {len(model.components)}]")
    return PcaModel(
        model.mean,
        model.components[:r],
        model.singular_values[:r],
        model.explained_variance_ratio[:r],
    )


def components_for_threshold(model: PcaModel, threshold: float) -> int:
    """Smallest r whose cumulative variance ratio reaches the threshold.

    Meaningful when the model was fitted with the full spectrum retained.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    cumulative = np.cumsum(model.explained_variance_ratio)
    hits = np.nonzero(cumulative >= threshold)[0]
    if len(hits) == 0:
        raise UnreachableVariance(
            f"cumulative variance tops out at {float(cumulative[-1]) if len(cumulative) else 0.0:.6f}, "
            f"below threshold {threshold}")
    return int(hits[0]) + 1


def project(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[-1] != model.mean.shape[0]:
        raise DimensionMismatch(
            f"rows have width {rows.shape[-1]}, model expects {model.mean.shape[0]}")
    return (rows - model.mean) @ model.components.T


def reconstruct_scores(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[-1] != len(model.components):
        raise DimensionMismatch(
            f"scores have width {scores.shape[-1]}, model has {len(model.components)} components")
    return scores @ model.components + model.mean


def project_reconstruct(model: PcaModel, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scores in component space plus the rank-r reconstruction."""
    scores = project(model, rows)
    return scores, reconstruct_scores(model, scores)
