import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from kernelprune import dataset
from kernelprune.dataset import (BenchmarkRecord, DegenerateSplit,
                                 DuplicateCell, IncompleteGrid,
                                 InvalidConfigValue, KernelConfig,
                                 MalformedNumber, MissingColumn,
                                 NonPositiveValue, ProblemSize, all_configs)

from conftest import random_performance_matrix


def test_config_space_size_and_order():
    configs = all_configs()
    assert len(configs) == 640
    assert len(set(configs)) == 640
    assert list(configs) == sorted(configs)
    assert configs[0].as_tuple() == (1, 1, 1, 1, 64)
    assert configs[-1].as_tuple() == (8, 8, 8, 128, 1)


def test_config_validation():
    KernelConfig(1, 2, 4, 8, 8)
    with pytest.raises(InvalidConfigValue):
        KernelConfig(3, 1, 1, 8, 8)
    with pytest.raises(InvalidConfigValue):
        KernelConfig(1, 1, 1, 4, 4)


def test_problem_positive():
    with pytest.raises(NonPositiveValue):
        ProblemSize(0, 1, 1)


def test_record_rejects_bad_measurements():
    p, c = ProblemSize(1, 1, 1), all_configs()[0]
    with pytest.raises(NonPositiveValue):
        BenchmarkRecord(p, c, -1.0, 5.0)
    with pytest.raises(MalformedNumber):
        BenchmarkRecord(p, c, float("nan"), 5.0)
    with pytest.raises(NonPositiveValue):
        BenchmarkRecord(p, c, 5.0, 0.0)


def _write(tmp_path, text):
    path = tmp_path / "data.csv"
    path.write_text(text)
    return path


HEADER = ",".join(dataset.CSV_COLUMNS)


def test_load_write_round_trip(tmp_path):
    configs = all_configs()[:3]
    problems = [ProblemSize(8, 8, 8), ProblemSize(16, 4, 2)]
    records = [BenchmarkRecord(p, c, 10.5, 2.25)
               for p in problems for c in configs]
    path = tmp_path / "rt.csv"
    dataset.write_records(records, path)
    assert dataset.load_records(path) == records


def test_load_rejects_wrong_header(tmp_path):
    with pytest.raises(MissingColumn):
        dataset.load_records(_write(tmp_path, "m,k,n\n1,1,1\n"))


def test_load_reports_line_numbers(tmp_path):
    good = "16,16,16,1,1,1,1,64,100.0,5.0"
    bad = "16,16,16,1,1,1,1,64,abc,5.0"
    with pytest.raises(MalformedNumber) as err:
        dataset.load_records(_write(tmp_path, f"{HEADER}\n{good}\n{bad}\n"))
    assert "line 3" in str(err.value)


def test_load_rejects_bad_config(tmp_path):
    row = "16,16,16,5,1,1,1,64,100.0,5.0"
    with pytest.raises(InvalidConfigValue) as err:
        dataset.load_records(_write(tmp_path, f"{HEADER}\n{row}\n"))
    assert "line 2" in str(err.value)


def test_load_rejects_empty(tmp_path):
    with pytest.raises(dataset.EmptyInput):
        dataset.load_records(_write(tmp_path, f"{HEADER}\n"))


def _full_grid_records(problems, configs):
    return [BenchmarkRecord(p, c, 100.0, 1.0 + i + 3 * j)
            for i, p in enumerate(problems)
            for j, c in enumerate(configs)]


def test_build_matrix_orders_and_validates():
    configs = all_configs()[:4]
    problems = [ProblemSize(32, 32, 32), ProblemSize(8, 8, 8)]
    records = _full_grid_records(problems, configs)
    raw = dataset.build_matrix(records)
    # problems keep first-appearance order; configs are canonical
    assert raw.problems == tuple(problems)
    assert raw.configs == tuple(configs)
    assert raw.values.shape == (2, 4)
    assert raw.values[1, 2] == 1.0 + 1 + 3 * 2


def test_build_matrix_rejects_duplicate_cell():
    configs = all_configs()[:2]
    problems = [ProblemSize(8, 8, 8)]
    records = _full_grid_records(problems, configs)
    with pytest.raises(DuplicateCell):
        dataset.build_matrix(records + records[:1])


def test_build_matrix_names_first_hole():
    configs = all_configs()[:3]
    problems = [ProblemSize(8, 8, 8), ProblemSize(4, 4, 4)]
    records = _full_grid_records(problems, configs)
    removed = records.pop(4)  # second problem, second config
    with pytest.raises(IncompleteGrid) as err:
        dataset.build_matrix(records)
    assert str(removed.problem.as_tuple()) in str(err.value) or "4" in str(err.value)


def test_drop_incomplete_problems():
    configs = all_configs()[:3]
    problems = [ProblemSize(8, 8, 8), ProblemSize(4, 4, 4)]
    records = _full_grid_records(problems, configs)
    del records[4]
    kept, dropped = dataset.drop_incomplete_problems(records)
    assert dropped == (ProblemSize(4, 4, 4),)
    assert {r.problem for r in kept} == {ProblemSize(8, 8, 8)}
    raw = dataset.build_matrix(kept)
    assert raw.values.shape == (1, 3)


@given(hnp.arrays(np.float64,
                  st.tuples(st.integers(1, 8), st.integers(1, 12)),
                  elements=st.floats(1e-6, 1e6)))
def test_normalize_rows_properties(values):
    normed = dataset.normalize_rows(values)
    assert (normed > 0.0).all() and (normed <= 1.0).all()
    assert (normed.max(axis=1) == 1.0).all()
    # idempotent bitwise
    assert np.array_equal(dataset.normalize_rows(normed), normed)


def test_normalize_rejects_nonpositive():
    with pytest.raises(NonPositiveValue):
        dataset.normalize_rows(np.array([[1.0, 0.0]]))


def test_split_disjoint_sorted_and_sized():
    matrix = random_performance_matrix(0, 23, 10)
    part = dataset.split(matrix, 0.2, 42)
    n_test = len(part.test.problems)
    assert n_test == int(np.floor(23 * 0.2 + 0.5))
    assert len(part.train.problems) == 23 - n_test
    assert not set(part.train.problems) & set(part.test.problems)
    assert set(part.train.problems) | set(part.test.problems) == set(matrix.problems)
    part.train.validate()
    part.test.validate()


def test_split_deterministic_and_seed_sensitive():
    matrix = random_performance_matrix(1, 40, 6)
    a = dataset.split(matrix, 0.25, 9)
    b = dataset.split(matrix, 0.25, 9)
    c = dataset.split(matrix, 0.25, 10)
    assert a.test.problems == b.test.problems
    assert a.test.problems != c.test.problems


def test_split_rejects_degenerate():
    matrix = random_performance_matrix(2, 4, 5)
    with pytest.raises(DegenerateSplit):
        dataset.split(matrix, 0.0, 1)
    with pytest.raises(DegenerateSplit):
        dataset.split(matrix, 1.0, 1)
    with pytest.raises(DegenerateSplit):
        dataset.split(matrix, 0.01, 1)  # rounds to zero test rows
