"""Benchmark-driven pruning of GPU kernel configurations.

Given exhaustive matmul benchmark sweeps (problem sizes x kernel
configurations), this package normalizes them into a relative-performance
matrix, selects small high-coverage configuration subsets with several
pruning strategies, trains runtime selector models over (m, k, n), and emits
a dependency-free C selector function plus reference predictions for parity
checking. A synthetic benchmark generator stands in for real hardware runs.
"""

__version__ = "0.1.0"
