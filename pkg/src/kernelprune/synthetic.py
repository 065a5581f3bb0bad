"""Analytic throughput model for generating benchmark datasets in software.

The model multiplies a peak rate by utilization factors: padding waste along
each dimension, a register-blocking benefit that grows with the tile volume,
and a work-group occupancy knee. It is intentionally simple; what matters is
that many configs are never optimal while winners shift with problem shape,
and that every number is reproducible bit-for-bit from the seed.

The scalar path (analytic_perf) and the vectorized path (analytic_matrix)
must agree bitwise, so the vectorized code sticks to elementwise IEEE ops
(integer ceil, divide, multiply) and precomputes each config's constants with
plain Python floats. Only the noise step uses transcendentals, and noise has
no scalar twin to disagree with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import BenchmarkRecord, KernelConfig, ProblemSize, all_configs
from .errors import DataError
from .rng import (PROBLEM_STREAM, SYNTH_STREAM, Xoshiro256StarStar,
                  derive_seed, derive_seed_array, standard_normals_from_seeds)

CANONICAL_SEED = 42
CANONICAL_NOISE_SIGMA = 0.05
CANONICAL_PEAK_GFLOPS = 8192.0
CANONICAL_PROBLEM_COUNT = 170

# tile-volume benefit normalizer; written as 512**0.3 (not the algebraically
# equal 8**0.9, one ulp away) so the max-tiles config lands on exactly 1.0
_REG_NORM = 512.0 ** 0.3


@dataclass
class SyntheticSpec:
    problems: tuple[ProblemSize, ...]
    seed: int
    noise_sigma: float = CANONICAL_NOISE_SIGMA
    peak_gflops: float = CANONICAL_PEAK_GFLOPS

    def __post_init__(self):
        if self.noise_sigma < 0.0:
            raise DataError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if self.peak_gflops <= 0.0:
            raise DataError(f"peak_gflops must be positive, got {self.peak_gflops!r}")


def _waste(dim: int, tile: int) -> float:
    padded = ((dim + tile - 1) // tile) * tile
    return dim / padded


def _register_benefit(config: KernelConfig) -> float:
    return (config.row_tile * config.col_tile * config.acc) ** 0.3 / _REG_NORM


def _occupancy(config: KernelConfig) -> float:
    return min(1.0, config.wg_rows * config.wg_cols / 64.0)


def analytic_perf(problem: ProblemSize, config: KernelConfig, peak: float) -> float:
    """Noise-free gflops for one cell. Always in (0, peak]."""
    um = _waste(problem.m, config.row_tile * config.wg_rows)
    un = _waste(problem.n, config.col_tile * config.wg_cols)
    uk = _waste(problem.k, config.acc)
    return peak * um * un * uk * _register_benefit(config) * _occupancy(config)


def analytic_matrix(problems, configs, peak: float) -> np.ndarray:
    """Noise-free gflops grid, bitwise equal to looping analytic_perf."""
    problems = tuple(problems)
    configs = tuple(configs)
    m = np.array([p.m for p in problems], dtype=np.int64)[:, None]
    n = np.array([p.n for p in problems], dtype=np.int64)[:, None]
    k = np.array([p.k for p in problems], dtype=np.int64)[:, None]
    tm = np.array([c.row_tile * c.wg_rows for c in configs], dtype=np.int64)
    tn = np.array([c.col_tile * c.wg_cols for c in configs], dtype=np.int64)
    tk = np.array([c.acc for c in configs], dtype=np.int64)
    reg = np.array([_register_benefit(c) for c in configs])
    occ = np.array([_occupancy(c) for c in configs])
    um = m / (((m + tm - 1) // tm) * tm)
    un = n / (((n + tn - 1) // tn) * tn)
    uk = k / (((k + tk - 1) // tk) * tk)
    # same multiplication order as the scalar path
    return peak * um * un * uk * reg * occ


def generate(spec: SyntheticSpec) -> list[BenchmarkRecord]:
    """Full benchmark grid: one record per (problem, config), row-major.

    Noise is multiplicative lognormal, one PRNG stream per cell keyed by
    (problem index, config index), so record order never changes the data.
    """
    if not spec.problems:
        raise DataError("spec has no problems")
    configs = all_configs()
    gflops = analytic_matrix(spec.problems, configs, spec.peak_gflops)
    if spec.noise_sigma != 0.0:
        p_idx = np.arange(len(spec.problems), dtype=np.uint64)[:, None]
        c_idx = np.arange(len(configs), dtype=np.uint64)[None, :]
        z = standard_normals_from_seeds(
            derive_seed_array(spec.seed, SYNTH_STREAM, p_idx, c_idx))
        gflops = gflops * np.exp(spec.noise_sigma * z)
    records = []
    for i, problem in enumerate(spec.problems):
        flops = 2 * problem.m * problem.n * problem.k
        for j, config in enumerate(configs):
            g = float(gflops[i, j])
            records.append(BenchmarkRecord(problem, config, flops / g, g))
    return records


def canonical_problems(count: int = CANONICAL_PROBLEM_COUNT,
                       seed: int = CANONICAL_SEED) -> tuple[ProblemSize, ...]:
    """Distinct problem shapes: powers of two, 1.5x multiples, off-by-ones."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = Xoshiro256StarStar(derive_seed(seed, PROBLEM_STREAM))
    seen = set()
    out = []
    while len(out) < count:
        dims = []
        for _ in range(3):
            base = 1 << (4 + rng.below(8))
            style = rng.below(4)
            if style == 2:
                dims.append(3 * base // 2)
            elif style == 3:
                dims.append(base - 1 if rng.below(2) == 0 else base + 1)
            else:
                dims.append(base)
        triple = tuple(dims)
        if triple in seen:
            continue
        seen.add(triple)
        out.append(ProblemSize(*triple))
    return tuple(out)


def canonical_spec(count: int = CANONICAL_PROBLEM_COUNT,
                   seed: int = CANONICAL_SEED) -> SyntheticSpec:
    return SyntheticSpec(canonical_problems(count, seed), seed)


# --------------------------------------------------------- serialization

def spec_to_json(spec: SyntheticSpec) -> str:
    doc = {
        "seed": spec.seed,
        "noise_sigma": spec.noise_sigma,
        "peak_gflops": spec.peak_gflops,
        "problems": [[p.m, p.k, p.n] for p in spec.problems],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_spec(spec: SyntheticSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec_to_json(spec))


def spec_from_json(text: str) -> SyntheticSpec:
    try:
        doc = json.loads(text)
        problems = tuple(ProblemSize(int(m), int(k), int(n))
                         for m, k, n in doc["problems"])
        return SyntheticSpec(problems, int(doc["seed"]),
                             float(doc["noise_sigma"]),
                             float(doc["peak_gflops"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad synthetic spec: {exc}")


def load_spec(path) -> SyntheticSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_json(fh.read())
