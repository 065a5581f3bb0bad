from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kernelprune import dataset, synthetic

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

REPO_ROOT = Path(__file__).resolve().parent.parent
CANONICAL_SPEC_PATH = REPO_ROOT / "configs" / "canonical.json"

# test_acceptance appends one [PASS]/[FAIL]/[SKIP] line per criterion;
# echoed after the run so they survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_performance_matrix(seed: int, p: int, c: int = None):
    """Valid normalized matrix over the first c canonical configs."""
    configs = dataset.all_configs()
    c = len(configs) if c is None else c
    gen = np.random.default_rng(seed)
    values = gen.uniform(0.05, 50.0, size=(p, c))
    problems = tuple(dataset.ProblemSize(*map(int, row))
                     for row in gen.integers(1, 5000, size=(p, 3)))
    # regenerate on the rare duplicate problem draw
    while len(set(problems)) != p:
        problems = tuple(dataset.ProblemSize(*map(int, row))
                         for row in gen.integers(1, 5000, size=(p, 3)))
    matrix = dataset.PerformanceMatrix(problems, configs[:c],
                                       dataset.normalize_rows(values))
    matrix.validate()
    return matrix


@pytest.fixture(scope="session")
def canonical_matrix():
    spec = synthetic.load_spec(CANONICAL_SPEC_PATH)
    matrix = dataset.normalize(dataset.build_matrix(synthetic.generate(spec)))
    matrix.validate()
    return matrix


@pytest.fixture(scope="session")
def canonical_split(canonical_matrix):
    return dataset.split(canonical_matrix, 0.2, 42)


@pytest.fixture(scope="session")
def small_split():
    """30-problem synthetic split for model-training tests."""
    spec = synthetic.SyntheticSpec(synthetic.canonical_problems(30, seed=7), 7)
    matrix = dataset.normalize(dataset.build_matrix(synthetic.generate(spec)))
    return dataset.split(matrix, 0.2, 7)
