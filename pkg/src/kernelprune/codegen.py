"""Export a trained decision-tree selector as a dependency-free C function.

The in-memory classifier compares z-scored log2 features against learned
thresholds. Shipping that to C would mean reproducing libm's log2 and the
scaler bit-for-bit, so instead each scaled threshold t on feature f is
replaced by the smallest integer v with scaled(log2 v) >= t. Because the
scaling map is strictly increasing in v, `value < v` in integer space decides
exactly like `scaled(value) < t` in float space, and the emitted C needs only
integer compares.
"""

from __future__ import annotations

import json

from .dataset import KernelConfig, ProblemSize
from .errors import DataError
from .selector_models import (FEATURE_NAMES, ClassLeaf, ClassSplit, NotATree,
                              SelectorModel, scaled_dim)

RAW_THRESHOLD_CAP = 1 << 62


def smallest_raw_threshold(scaler, feature: int, threshold: float) -> int:
    """Smallest integer v >= 1 whose scaled feature value reaches threshold."""
    if scaled_dim(scaler, feature, 1) >= threshold:
        return 1
    lo, hi = 1, 2
    while scaled_dim(scaler, feature, hi) < threshold:
        lo = hi
        hi *= 2
        if hi > RAW_THRESHOLD_CAP:
            return RAW_THRESHOLD_CAP
    # invariant: scaled(lo) < threshold <= scaled(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if scaled_dim(scaler, feature, mid) < threshold:
            lo = mid
        else:
            hi = mid
    return hi


def _config_dict(cfg: KernelConfig) -> dict:
    return {"acc": cfg.acc, "row_tile": cfg.row_tile, "col_tile": cfg.col_tile,
            "wg_rows": cfg.wg_rows, "wg_cols": cfg.wg_cols}


def export_tree(model: SelectorModel) -> dict:
    """Convert a decision-tree model into a raw-threshold document."""
    tag = model.impl[0]
    if tag == "doc":
        return model.impl[1]
    if tag == "const":
        return {"config": _config_dict(model.configs[model.impl[1]])}
    if tag != "tree":
        raise NotATree(f"cannot export a {model.kind!r} model as a tree")

    def walk(node):
        if isinstance(node, ClassLeaf):
            return {"config": _config_dict(model.configs[node.label])}
        assert isinstance(node, ClassSplit)
        return {"feature": FEATURE_NAMES[node.feature],
                "raw_threshold": smallest_raw_threshold(
                    model.scaler, node.feature, node.threshold),
                "left": walk(node.left),
                "right": walk(node.right)}

    return walk(model.impl[1])


def traverse_document(doc: dict, m: int, k: int, n: int) -> KernelConfig:
    values = {"m": m, "k": k, "n": n}
    node = doc
    while "config" not in node:
        node = node["left"] if values[node["feature"]] < node["raw_threshold"] else node["right"]
    c = node["config"]
    return KernelConfig(int(c["acc"]), int(c["row_tile"]), int(c["col_tile"]),
                        int(c["wg_rows"]), int(c["wg_cols"]))


def save_document(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


def load_document(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad tree document: {exc}")
    _check_document(doc)
    return doc


def _check_document(node) -> None:
    if not isinstance(node, dict):
        raise DataError("tree document nodes must be objects")
    if "config" in node:
        cfg = node["config"]
        for key in ("acc", "row_tile", "col_tile", "wg_rows", "wg_cols"):
            if key not in cfg:
                raise DataError(f"leaf config missing {key!r}")
        return
    for key in ("feature", "raw_threshold", "left", "right"):
        if key not in node:
            raise DataError(f"split node missing {key!r}")
    if node["feature"] not in FEATURE_NAMES:
        raise DataError(f"unknown split feature {node['feature']!r}")
    _check_document(node["left"])
    _check_document(node["right"])


# --------------------------------------------------------------- C source

class InvalidIdentifier(DataError):
    pass


def _require_identifier(symbol: str) -> None:
    if not symbol or not (symbol[0].isalpha() or symbol[0] == "_"):
        raise InvalidIdentifier(f"bad C identifier {symbol!r}")
    if not all(ch.isalnum() or ch == "_" for ch in symbol):
        raise InvalidIdentifier(f"bad C identifier {symbol!r}")


def emit_selector_source(doc: dict, symbol: str = "select_kernel") -> str:
    """Render the document as a self-contained C header."""
    _require_identifier(symbol)
    _check_document(doc)
    guard = symbol.upper() + "_H"
    out = [f"#ifndef {guard}",
           f"#define {guard}",
           "",
           "#include <stdint.h>",
           "",
           "typedef struct {",
           "    uint32_t acc;",
           "    uint32_t row_tile;",
           "    uint32_t col_tile;",
           "    uint32_t wg_rows;",
           "    uint32_t wg_cols;",
           f"}} {symbol}_config;",
           "",
           f"static inline {symbol}_config {symbol}(int64_t m, int64_t k, int64_t n) {{",
           "    (void)m;",
           "    (void)k;",
           "    (void)n;"]

    def emit(node, depth):
        pad = "    " * depth
        if "config" in node:
            c = node["config"]
            fields = ", ".join(
                f"{int(c[key])}u" for key in
                ("acc", "row_tile", "col_tile", "wg_rows", "wg_cols"))
            out.append(f"{pad}{symbol}_config out = {{{fields}}};")
            out.append(f"{pad}return out;")
            return
        out.append(f"{pad}if ({node['feature']} < INT64_C({int(node['raw_threshold'])})) {{")
        emit(node["left"], depth + 1)
        out.append(f"{pad}}} else {{")
        emit(node["right"], depth + 1)
        out.append(f"{pad}}}")

    emit(doc, 1)
    out.append("}")
    out.append("")
    out.append(f"#endif /* {guard} */")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------- parity data

def parity_grid() -> list[ProblemSize]:
    """Dim values spanning small exact sizes and power-of-two-ish large ones."""
    values = list(range(1, 9)) + [12, 16, 24, 32, 48, 64, 96, 128,
                                  192, 256, 384, 512, 768, 1024]
    return [ProblemSize(m, k, n) for m in values for k in values for n in values]


PREDICTION_COLUMNS = ("m", "k", "n", "acc", "row_tile", "col_tile",
                      "wg_rows", "wg_cols")


def emit_reference_predictions(doc: dict, problems) -> str:
    """CSV of document predictions, one row per problem, trailing newline."""
    lines = [",".join(PREDICTION_COLUMNS)]
    for p in problems:
        cfg = traverse_document(doc, p.m, p.k, p.n)
        lines.append(f"{p.m},{p.k},{p.n},{cfg.acc},{cfg.row_tile},"
                     f"{cfg.col_tile},{cfg.wg_rows},{cfg.wg_cols}")
    return "\n".join(lines) + "\n"


def load_reference_predictions(path) -> list[tuple[ProblemSize, KernelConfig]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != ",".join(PREDICTION_COLUMNS):
            raise DataError(f"bad predictions header: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise DataError(f"line {lineno}: expected 8 fields")
            try:
                nums = [int(v) for v in parts]
            except ValueError:
                raise DataError(f"line {lineno}: non-integer field")
            rows.append((ProblemSize(*nums[:3]), KernelConfig(*nums[3:])))
    return rows


def verify_document_against_model(model: SelectorModel, doc: dict,
                                  problems) -> int:
    """Count problems where float-space and integer-space paths disagree."""
    from .selector_models import predict
    mismatches = 0
    for p in problems:
        if predict(model, p) != traverse_document(doc, p.m, p.k, p.n):
            mismatches += 1
    return mismatches
