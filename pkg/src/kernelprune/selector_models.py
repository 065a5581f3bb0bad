"""Runtime selector models: predict a selected config from (m, k, n).

Features are z-scored log2 problem dims; the scaler is always fitted on the
training set only. Labels are positions into the Selection (argmax over the
selected columns, lowest position on ties). All learners are written here so
tie rules stay pinned: majority/vote/argmax ties resolve to the lower label,
nearest-neighbor distance ties to the lower training-row index.

Every log2 goes through ``raw_feature`` so that batch training features,
single-query features, and the code generator's integer threshold search are
bit-identical computations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import KernelConfig, PerformanceMatrix, ProblemSize
from .errors import DataError, DimensionMismatch
from .pruning import Score, Selection, _geomean
from .rng import FOREST_STREAM, SVM_STREAM, Xoshiro256StarStar, derive_seed

MODEL_KINDS = ("decision-tree", "random-forest", "knn1", "knn3",
               "linear-svm", "rbf-svm")

FEATURE_NAMES = ("m", "k", "n")


class DegenerateLabels(DataError):
    pass


class NotATree(DataError):
    pass


def raw_feature(value) -> float:
    return math.log2(value)


def problem_feature_matrix(problems) -> np.ndarray:
    return np.array([[raw_feature(p.m), raw_feature(p.k), raw_feature(p.n)]
                     for p in problems], dtype=np.float64)


@dataclass
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool per feature; constant features keep std 1

    @classmethod
    def fit(cls, raw: np.ndarray) -> "FeatureScaler":
        raw = np.asarray(raw, dtype=np.float64)
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        constant = std == 0.0
        std = np.where(constant, 1.0, std)
        return cls(mean, std, constant)

    def transform(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape[-1] != len(self.mean):
            raise DimensionMismatch(
                f"expected {len(self.mean)} features, got {raw.shape[-1]}")
        return (raw - self.mean) / self.std


def scaled_dim(scaler: FeatureScaler, feature: int, value) -> float:
    """Scale one raw integer dim; the exact expression predict() uses."""
    return (raw_feature(value) - float(scaler.mean[feature])) / float(scaler.std[feature])


def transform_problem(scaler: FeatureScaler, problem: ProblemSize) -> np.ndarray:
    return np.array([scaled_dim(scaler, 0, problem.m),
                     scaled_dim(scaler, 1, problem.k),
                     scaled_dim(scaler, 2, problem.n)])


@dataclass
class LabeledSet:
    features: np.ndarray   # (P, 3) scaled
    labels: np.ndarray     # (P,) positions into the selection
    selection: Selection
    configs: tuple[KernelConfig, ...]  # selection resolved against the matrix
    scaler: FeatureScaler


def make_labels(train: PerformanceMatrix, selection: Selection) -> LabeledSet:
    idx = list(selection.config_indices)
    if not idx:
        raise DataError("selection has no configs")
    labels = train.values[:, idx].argmax(axis=1)
    raw = problem_feature_matrix(train.problems)
    scaler = FeatureScaler.fit(raw)
    configs = tuple(train.configs[j] for j in idx)
    return LabeledSet(scaler.transform(raw), labels.astype(np.int64),
                      selection, configs, scaler)


@dataclass
class SelectorModel:
    kind: str
    selection: Selection
    configs: tuple[KernelConfig, ...]
    scaler: FeatureScaler
    impl: object
    params: dict


# ------------------------------------------------------ classifier CART

@dataclass
class ClassLeaf:
    label: int


@dataclass
class ClassSplit:
    feature: int
    threshold: float
    left: "ClassSplit | ClassLeaf"
    right: "ClassSplit | ClassLeaf"


def _majority(labels: np.ndarray) -> int:
    return int(np.bincount(labels).argmax())


def _gini_n(counts: np.ndarray, n: int) -> float:
    # n * gini impurity; plain counts arithmetic keeps ties exact
    return n - float((counts.astype(np.float64) ** 2).sum()) / n


def _grow_classifier(x: np.ndarray, y: np.ndarray, rows: np.ndarray,
                     rng: Xoshiro256StarStar | None = None,
                     subset_size: int | None = None):
    labels_here = y[rows]
    first = labels_here[0]
    if (labels_here == first).all():
        return ClassLeaf(int(first))
    n_features = x.shape[1]
    if rng is not None and subset_size is not None and subset_size < n_features:
        pool = list(range(n_features))
        for i in range(subset_size):
            j = i + rng.below(n_features - i)
            pool[i], pool[j] = pool[j], pool[i]
        candidates = sorted(pool[:subset_size])
    else:
        candidates = list(range(n_features))
    n = len(rows)
    counts_all = np.bincount(labels_here)
    base = _gini_n(counts_all, n)
    best = None
    for f in candidates:
        vals = x[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = labels_here[order]
        left_counts = np.zeros_like(counts_all)
        for i in range(1, n):
            left_counts[sy[i - 1]] += 1
            if sv[i] == sv[i - 1]:
                continue
            decrease = base - _gini_n(left_counts, i) - _gini_n(counts_all - left_counts, n - i)
            if decrease > 1e-12 and (best is None or decrease > best[0]):
                best = (decrease, f, (sv[i - 1] + sv[i]) / 2.0)
    if best is None:
        return ClassLeaf(_majority(labels_here))
    _, f, thr = best
    mask = x[rows, f] < thr
    return ClassSplit(f, thr,
                      _grow_classifier(x, y, rows[mask], rng, subset_size),
                      _grow_classifier(x, y, rows[~mask], rng, subset_size))


def _walk_classifier(node, features: np.ndarray) -> int:
    while isinstance(node, ClassSplit):
        node = node.left if features[node.feature] < node.threshold else node.right
    return node.label


# ------------------------------------------------------------- SVMs

def _linear_svm_fit(x: np.ndarray, y: np.ndarray, classes, seed: int,
                    epochs: int, c_param: float) -> np.ndarray:
    """One-vs-rest Pegasos subgradient descent; bias as a constant feature."""
    n = len(x)
    aug = np.hstack([x, np.ones((n, 1))])
    lam = 1.0 / (c_param * n)
    weights = np.zeros((len(classes), aug.shape[1]))
    for ci, cls in enumerate(classes):
        rng = Xoshiro256StarStar(derive_seed(seed, SVM_STREAM, ci))
        sign = np.where(y == cls, 1.0, -1.0)
        w = np.zeros(aug.shape[1])
        t = 0
        for _ in range(epochs):
            order = list(range(n))
            rng.shuffle(order)
            for i in order:
                t += 1
                eta = 1.0 / (lam * t)
                margin = sign[i] * float(w @ aug[i])
                w *= 1.0 - eta * lam
                if margin < 1.0:
                    w += (eta * sign[i]) * aug[i]
        weights[ci] = w
    return weights


def _rbf_gamma(x: np.ndarray) -> float:
    var = float(x.var())
    if var <= 0.0:
        return 1.0
    return 1.0 / (x.shape[1] * var)


def _rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * d2)


def _rbf_svm_fit(x: np.ndarray, y: np.ndarray, classes, seed: int,
                 epochs: int, c_param: float, gamma: float):
    """Kernelized Pegasos: counts of margin violations per support row."""
    n = len(x)
    lam = 1.0 / (c_param * n)
    gram = _rbf_kernel(x, x, gamma)
    total = epochs * n
    alphas = np.zeros((len(classes), n))
    for ci, cls in enumerate(classes):
        rng = Xoshiro256StarStar(derive_seed(seed, SVM_STREAM, ci))
        sign = np.where(y == cls, 1.0, -1.0)
        alpha = np.zeros(n)
        for t in range(1, total + 1):
            i = rng.below(n)
            g = sign[i] * float((alpha * sign) @ gram[:, i]) / (lam * t)
            if g < 1.0:
                alpha[i] += 1.0
        alphas[ci] = alpha
    return alphas, lam, total


# ------------------------------------------------------------ training

def train_model(kind: str, labeled: LabeledSet, seed: int,
                epochs: int = 100, trees: int = 100, bootstrap: bool = True,
                feature_subset: int | None = None, c_param: float = 1.0) -> SelectorModel:
    """Fit one selector model; every kind is deterministic for a given seed."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}, expected one of {MODEL_KINDS}")
    x, y = labeled.features, labeled.labels
    if len(x) == 0:
        raise DegenerateLabels("empty labeled set")
    params: dict = {}
    distinct = np.unique(y)
    if len(distinct) == 1:
        impl = ("const", int(distinct[0]))
        return SelectorModel(kind, labeled.selection, labeled.configs,
                             labeled.scaler, impl, params)

    if kind == "decision-tree":
        impl = ("tree", _grow_classifier(x, y, np.arange(len(x))))
    elif kind == "random-forest":
        n_features = x.shape[1]
        subset = feature_subset or max(1, (2 * n_features + 2) // 3)
        grown = []
        for t in range(trees):
            rng = Xoshiro256StarStar(derive_seed(seed, FOREST_STREAM, t))
            rows = (np.array([rng.below(len(x)) for _ in range(len(x))])
                    if bootstrap else np.arange(len(x)))
            grown.append(_grow_classifier(x, y, rows, rng, subset))
        impl = ("forest", grown)
        params = {"trees": trees, "bootstrap": bootstrap, "feature_subset": subset}
    elif kind in ("knn1", "knn3"):
        impl = ("knn", int(kind[3:]), x.copy(), y.copy())
    elif kind == "linear-svm":
        classes = [int(c) for c in distinct]
        weights = _linear_svm_fit(x, y, classes, seed, epochs, c_param)
        impl = ("linear-svm", classes, weights)
        params = {"epochs": epochs, "c": c_param}
    else:  # rbf-svm
        classes = [int(c) for c in distinct]
        gamma = _rbf_gamma(x)
        alphas, lam, total = _rbf_svm_fit(x, y, classes, seed, epochs, c_param, gamma)
        impl = ("rbf-svm", classes, gamma, lam, total, alphas, x.copy(), y.copy())
        params = {"epochs": epochs, "c": c_param, "gamma": gamma}
    return SelectorModel(kind, labeled.selection, labeled.configs,
                         labeled.scaler, impl, params)


# ----------------------------------------------------------- prediction

def _predict_label(model: SelectorModel, features: np.ndarray) -> int:
    tag = model.impl[0]
    if tag == "const":
        return model.impl[1]
    if tag == "tree":
        return _walk_classifier(model.impl[1], features)
    if tag == "forest":
        votes = np.bincount([_walk_classifier(t, features) for t in model.impl[1]],
                            minlength=len(model.configs))
        return int(votes.argmax())
    if tag == "knn":
        _, k, train_x, train_y = model.impl
        d2 = ((train_x - features) ** 2).sum(axis=1)
        nearest = np.lexsort((np.arange(len(d2)), d2))[:k]
        return int(np.bincount(train_y[nearest], minlength=len(model.configs)).argmax())
    if tag == "linear-svm":
        _, classes, weights = model.impl
        aug = np.append(features, 1.0)
        return classes[int((weights @ aug).argmax())]
    if tag == "rbf-svm":
        _, classes, gamma, lam, total, alphas, train_x, train_y = model.impl
        kvec = np.exp(-gamma * ((train_x - features) ** 2).sum(axis=1))
        margins = [float((alphas[ci] * np.where(train_y == cls, 1.0, -1.0)) @ kvec)
                   / (lam * total) for ci, cls in enumerate(classes)]
        return classes[int(np.argmax(margins))]
    if tag == "doc":
        raise DataError("document-backed models predict configs directly")
    raise DataError(f"unknown model impl {tag!r}")


def predict(model: SelectorModel, problem: ProblemSize) -> KernelConfig:
    if model.impl[0] == "doc":
        from .codegen import traverse_document
        return traverse_document(model.impl[1], problem.m, problem.k, problem.n)
    features = transform_problem(model.scaler, problem)
    return model.configs[_predict_label(model, features)]


def evaluate_model(model: SelectorModel, matrix: PerformanceMatrix) -> Score:
    """Score achieved by following the model's prediction on each row."""
    col_of = {c: j for j, c in enumerate(matrix.configs)}
    achieved = np.empty(len(matrix.problems))
    for i, problem in enumerate(matrix.problems):
        cfg = predict(model, problem)
        if cfg not in col_of:
            raise DataError(f"predicted config {cfg.as_tuple()} not in matrix")
        achieved[i] = matrix.values[i, col_of[cfg]]
    return Score(_geomean(achieved))


# -------------------------------------------------------- serialization

def _config_dict(cfg: KernelConfig) -> dict:
    return {"acc": cfg.acc, "row_tile": cfg.row_tile, "col_tile": cfg.col_tile,
            "wg_rows": cfg.wg_rows, "wg_cols": cfg.wg_cols}


def _selection_block(model: SelectorModel) -> dict:
    return {
        "method": model.selection.method,
        "budget": model.selection.budget,
        "seed": model.selection.seed,
        "configs": [_config_dict(c) for c in model.configs],
    }


def _scaler_block(scaler: FeatureScaler) -> dict:
    return {"mean": [float(v) for v in scaler.mean],
            "std": [float(v) for v in scaler.std],
            "constant": [bool(v) for v in scaler.constant]}


def _scaler_from_block(block) -> FeatureScaler:
    return FeatureScaler(np.array(block["mean"], dtype=np.float64),
                         np.array(block["std"], dtype=np.float64),
                         np.array(block["constant"], dtype=bool))


def _classifier_node_to_dict(node) -> dict:
    if isinstance(node, ClassLeaf):
        return {"label": node.label}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _classifier_node_to_dict(node.left),
            "right": _classifier_node_to_dict(node.right)}


def _classifier_node_from_dict(doc):
    if "label" in doc:
        return ClassLeaf(int(doc["label"]))
    return ClassSplit(int(doc["feature"]), float(doc["threshold"]),
                      _classifier_node_from_dict(doc["left"]),
                      _classifier_node_from_dict(doc["right"]))


def model_to_json(model: SelectorModel) -> str:
    doc: dict = {"kind": model.kind, "selection": _selection_block(model)}
    tag = model.impl[0]
    if tag == "const":
        doc["constant_label"] = model.impl[1]
    elif tag == "tree":
        from .codegen import export_tree
        doc["tree"] = export_tree(model)
    elif tag == "forest":
        doc["scaler"] = _scaler_block(model.scaler)
        doc["params"] = model.params
        doc["trees"] = [_classifier_node_to_dict(t) for t in model.impl[1]]
    elif tag == "knn":
        doc["scaler"] = _scaler_block(model.scaler)
        doc["k"] = model.impl[1]
        doc["features"] = [[float(v) for v in row] for row in model.impl[2]]
        doc["labels"] = [int(v) for v in model.impl[3]]
    elif tag == "linear-svm":
        doc["scaler"] = _scaler_block(model.scaler)
        doc["classes"] = model.impl[1]
        doc["weights"] = [[float(v) for v in row] for row in model.impl[2]]
    elif tag == "rbf-svm":
        _, classes, gamma, lam, total, alphas, train_x, train_y = model.impl
        doc["scaler"] = _scaler_block(model.scaler)
        doc["classes"] = classes
        doc["gamma"] = gamma
        doc["lam"] = lam
        doc["iterations"] = total
        doc["alphas"] = [[float(v) for v in row] for row in alphas]
        doc["features"] = [[float(v) for v in row] for row in train_x]
        doc["labels"] = [int(v) for v in train_y]
    elif tag == "doc":
        doc["tree"] = model.impl[1]
    else:
        raise DataError(f"cannot serialize model impl {tag!r}")
    return json.dumps(doc, indent=2) + "\n"


def save_model(model: SelectorModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def model_from_json(text: str) -> SelectorModel:
    try:
        doc = json.loads(text)
        kind = doc["kind"]
        sel = doc["selection"]
        configs = tuple(KernelConfig(int(e["acc"]), int(e["row_tile"]),
                                     int(e["col_tile"]), int(e["wg_rows"]),
                                     int(e["wg_cols"])) for e in sel["configs"])
        selection = Selection(sel["method"], int(sel["budget"]), int(sel["seed"]),
                              tuple(range(len(configs))))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad model document: {exc}")
    # note: config_indices in a reloaded model are positions into `configs`,
    # not matrix columns; prediction and evaluation only ever use configs.
    scaler = (_scaler_from_block(doc["scaler"]) if "scaler" in doc
              else FeatureScaler(np.zeros(3), np.ones(3), np.zeros(3, dtype=bool)))
    params = doc.get("params", {})
    if "constant_label" in doc:
        impl = ("const", int(doc["constant_label"]))
    elif kind == "decision-tree":
        impl = ("doc", doc["tree"])
    elif kind == "random-forest":
        impl = ("forest", [_classifier_node_from_dict(t) for t in doc["trees"]])
    elif kind in ("knn1", "knn3"):
        impl = ("knn", int(doc["k"]),
                np.array(doc["features"], dtype=np.float64),
                np.array(doc["labels"], dtype=np.int64))
    elif kind == "linear-svm":
        impl = ("linear-svm", [int(c) for c in doc["classes"]],
                np.array(doc["weights"], dtype=np.float64))
    elif kind == "rbf-svm":
        impl = ("rbf-svm", [int(c) for c in doc["classes"]], float(doc["gamma"]),
                float(doc["lam"]), int(doc["iterations"]),
                np.array(doc["alphas"], dtype=np.float64),
                np.array(doc["features"], dtype=np.float64),
                np.array(doc["labels"], dtype=np.int64))
    else:
        raise DataError(f"unknown model kind {kind!r}")
    return SelectorModel(kind, selection, configs, scaler, impl, params)


def load_model(path) -> SelectorModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
