"""Benchmark records, the normalized performance matrix, and data splits.

The on-disk interchange format is a strict UTF-8 CSV with header
``m,k,n,acc,row_tile,col_tile,wg_rows,wg_cols,runtime_ns,gflops``: eight
positive integers and two positive reals per row. Loading is fail-fast and
every error names the first offending line.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import DataError
from .rng import SPLIT_STREAM, Xoshiro256StarStar, derive_seed

TILE_VALUES = (1, 2, 4, 8)
WORK_GROUP_SHAPES = (
    (1, 64), (1, 128), (8, 8), (8, 16), (8, 32),
    (16, 8), (16, 16), (32, 8), (64, 1), (128, 1),
)
CSV_COLUMNS = ("m", "k", "n", "acc", "row_tile", "col_tile",
               "wg_rows", "wg_cols", "runtime_ns", "gflops")


class MissingColumn(DataError):
    pass


class MalformedNumber(DataError):
    pass


class NonPositiveValue(DataError):
    pass


class InvalidConfigValue(DataError):
    pass


class DuplicateCell(DataError):
    pass


class IncompleteGrid(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class EmptyInput(DataError):
    pass


@dataclass(frozen=True, order=True)
class KernelConfig:
    """Compile-time tile parameters plus the launch work-group shape.

    Field order doubles as the canonical sort order, so ``sorted(configs)``
    yields the column ordering used by every matrix in the package.
    """

    acc: int
    row_tile: int
    col_tile: int
    wg_rows: int
    wg_cols: int

    def __post_init__(self):
        for name in ("acc", "row_tile", "col_tile"):
            if getattr(self, name) not in TILE_VALUES:
                raise InvalidConfigValue(f"{name}={getattr(self, name)} not in {TILE_VALUES}")
        if (self.wg_rows, self.wg_cols) not in WORK_GROUP_SHAPES:
            raise InvalidConfigValue(
                f"work-group shape {self.wg_rows}x{self.wg_cols} not supported")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.acc, self.row_tile, self.col_tile, self.wg_rows, self.wg_cols)


@dataclass(frozen=True, order=True)
class ProblemSize:
    m: int
    k: int
    n: int

    def __post_init__(self):
        if min(self.m, self.k, self.n) < 1:
            raise NonPositiveValue(f"problem dims must be >= 1, got {(self.m, self.k, self.n)}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.m, self.k, self.n)


@dataclass(frozen=True)
class BenchmarkRecord:
    problem: ProblemSize
    config: KernelConfig
    runtime_ns: float
    gflops: float

    def __post_init__(self):
        for name in ("runtime_ns", "gflops"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise MalformedNumber(f"{name} must be finite, got {v!r}")
            if v <= 0.0:
                raise NonPositiveValue(f"{name} must be positive, got {v!r}")


@lru_cache(maxsize=1)
def all_configs() -> tuple[KernelConfig, ...]:
    """The full 640-point configuration space, canonically ordered."""
    return tuple(
        KernelConfig(acc, rt, ct, wr, wc)
        for acc, rt, ct, (wr, wc) in sorted(
            product(TILE_VALUES, TILE_VALUES, TILE_VALUES, WORK_GROUP_SHAPES))
    )


@dataclass
class RawMatrix:
    """Dense gflops grid: one row per problem, one column per config."""

    problems: tuple[ProblemSize, ...]
    configs: tuple[KernelConfig, ...]
    values: np.ndarray


@dataclass
class PerformanceMatrix:
    """Per-row normalized performance: each entry is gflops / row max.

    Invariants: entries in (0, 1], every row contains an exact 1.0, problems
    and configs are unique, configs canonically sorted.
    """

    problems: tuple[ProblemSize, ...]
    configs: tuple[KernelConfig, ...]
    values: np.ndarray

    def validate(self) -> None:
        p, c = self.values.shape
        if p != len(self.problems) or c != len(self.configs):
            raise DataError("matrix shape does not match problem/config lists")
        if len(set(self.problems)) != p or len(set(self.configs)) != c:
            raise DataError("problems and configs must be unique")
        if tuple(sorted(self.configs)) != self.configs:
            raise DataError("configs not canonically ordered")
        if not (self.values > 0.0).all() or not (self.values <= 1.0).all():
            raise DataError("entries must lie in (0, 1]")
        if not (self.values.max(axis=1) == 1.0).all():
            raise DataError("every row must contain an exact 1.0")


@dataclass
class DataSplit:
    train: PerformanceMatrix
    test: PerformanceMatrix
    seed: int


def _parse_int(text: str, column: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedNumber(f"line {line}: column {column!r} is not an integer: {text!r}")


def _parse_real(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedNumber(f"line {line}: column {column!r} is not a number: {text!r}")
    if not math.isfinite(value):
        raise MalformedNumber(f"line {line}: column {column!r} is not finite: {text!r}")
    return value


def load_records(path) -> list[BenchmarkRecord]:
    """Parse and validate an interchange CSV; raises on the first bad line."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: empty file, expected header {','.join(CSV_COLUMNS)}")
        if tuple(header) != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in header]
            if missing:
                raise MissingColumn(f"{path}: header is missing column(s) {missing}")
            raise MissingColumn(f"{path}: header must be exactly {','.join(CSV_COLUMNS)}")
        records = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise MalformedNumber(
                    f"line {line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            ints = [_parse_int(row[i], CSV_COLUMNS[i], line) for i in range(8)]
            runtime_ns = _parse_real(row[8], "runtime_ns", line)
            gflops = _parse_real(row[9], "gflops", line)
            m, k, n, acc, rt, ct, wr, wc = ints
            if min(m, k, n) < 1:
                raise NonPositiveValue(f"line {line}: m,k,n must be >= 1, got {(m, k, n)}")
            if runtime_ns <= 0.0 or gflops <= 0.0:
                raise NonPositiveValue(
                    f"line {line}: runtime_ns and gflops must be positive")
            try:
                config = KernelConfig(acc, rt, ct, wr, wc)
            except InvalidConfigValue as exc:
                raise InvalidConfigValue(f"line {line}: {exc}")
            records.append(BenchmarkRecord(ProblemSize(m, k, n), config, runtime_ns, gflops))
    if not records:
        raise EmptyInput(f"{path}: no data rows")
    return records


def write_records(records, path) -> None:
    """Write records in the interchange schema; floats use repr round-trips."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.problem.m, r.problem.k, r.problem.n,
                r.config.acc, r.config.row_tile, r.config.col_tile,
                r.config.wg_rows, r.config.wg_cols,
                repr(r.runtime_ns), repr(r.gflops),
            ])


def build_matrix(records) -> RawMatrix:
    """Arrange records into a dense grid; rejects duplicates and holes.

    Columns are the canonically-sorted configs present anywhere in the input;
    rows are problems in order of first appearance.
    """
    if not records:
        raise EmptyInput("no benchmark records")
    configs = tuple(sorted({r.config for r in records}))
    cidx = {c: j for j, c in enumerate(configs)}
    problems: list[ProblemSize] = []
    pidx: dict[ProblemSize, int] = {}
    for r in records:
        if r.problem not in pidx:
            pidx[r.problem] = len(problems)
            problems.append(r.problem)
    values = np.zeros((len(problems), len(configs)), dtype=np.float64)
    seen = np.zeros(values.shape, dtype=bool)
    for r in records:
        i, j = pidx[r.problem], cidx[r.config]
        if seen[i, j]:
            raise DuplicateCell(
                f"duplicate measurement for problem {r.problem.as_tuple()} "
                f"config {r.config.as_tuple()}")
        seen[i, j] = True
        values[i, j] = r.gflops
    if not seen.all():
        i, j = map(int, np.argwhere(~seen)[0])
        raise IncompleteGrid(
            f"problem {problems[i].as_tuple()} lacks a measurement for "
            f"config {configs[j].as_tuple()}")
    return RawMatrix(tuple(problems), configs, values)


def drop_incomplete_problems(records) -> tuple[list[BenchmarkRecord], tuple[ProblemSize, ...]]:
    """Filter out problems that do not cover every config present anywhere."""
    configs = {r.config for r in records}
    per_problem: dict[ProblemSize, set] = {}
    order: list[ProblemSize] = []
    for r in records:
        if r.problem not in per_problem:
            per_problem[r.problem] = set()
            order.append(r.problem)
        per_problem[r.problem].add(r.config)
    dropped = tuple(p for p in order if per_problem[p] != configs)
    bad = set(dropped)
    return [r for r in records if r.problem not in bad], dropped


def normalize_rows(values: np.ndarray) -> np.ndarray:
    """Divide each row by its max. Idempotent bitwise: x / 1.0 == x."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise EmptyInput("need a non-empty 2-D array")
    if not (values > 0.0).all():
        raise NonPositiveValue("all performance values must be positive")
    return values / values.max(axis=1)[:, None]


def normalize(raw: RawMatrix) -> PerformanceMatrix:
    matrix = PerformanceMatrix(raw.problems, raw.configs, normalize_rows(raw.values))
    matrix.validate()
    return matrix


def _take_rows(matrix: PerformanceMatrix, rows) -> PerformanceMatrix:
    return PerformanceMatrix(
        tuple(matrix.problems[i] for i in rows),
        matrix.configs,
        matrix.values[list(rows)].copy(),
    )


def split(matrix: PerformanceMatrix, test_fraction: float, seed: int) -> DataSplit:
    """Seeded shuffle split. Test size = round-half-up(P * test_fraction).

    Row order inside each side preserves the original matrix order.
    """
    p = len(matrix.problems)
    if p < 2:
        raise DegenerateSplit("need at least 2 problems to split")
    if not 0.0 < test_fraction < 1.0:
        raise DegenerateSplit(f"test_fraction must be in (0, 1), got {test_fraction}")
    test_size = int(math.floor(p * test_fraction + 0.5))
    if test_size < 1 or p - test_size < 1:
        raise DegenerateSplit(
            f"split of {p} problems at fraction {test_fraction} leaves an empty side")
    idx = list(range(p))
    Xoshiro256StarStar(derive_seed(seed, SPLIT_STREAM)).shuffle(idx)
    test_rows = sorted(idx[:test_size])
    train_rows = sorted(idx[test_size:])
    return DataSplit(_take_rows(matrix, train_rows), _take_rows(matrix, test_rows), seed)
