"""Portable deterministic pseudo-randomness.

Every stochastic step in the toolkit (data splits, k-means++ seeding and
restarts, forest bootstraps, SVM epoch shuffles, synthetic measurement noise)
draws from one generator family: xoshiro256** state-seeded with splitmix64.
Results therefore reproduce bit-for-bit for a given 64-bit seed, independent
of Python hash randomization or library versions.

Independent consumers get their own streams by folding small integer tags
into the base seed with ``derive_seed``; the tags below are the package-wide
registry. Per-restart / per-tree / per-cell streams append further words, so
adding consumers never perturbs anyone else's draws.

Normal deviates are produced only through the vectorized Box-Muller path
(``standard_normals_from_seeds``); scalar libm and numpy transcendentals can
disagree in the last bit, so there is deliberately no scalar ``normal()``.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# stream tags for derive_seed
SPLIT_STREAM = 1    # train/test shuffles
KMEANS_STREAM = 2   # + restart index
FOREST_STREAM = 3   # + tree index
SVM_STREAM = 4      # + class index
SYNTH_STREAM = 5    # + problem index + config index
PROBLEM_STREAM = 6  # canonical synthetic problem-list generation


def _mix(z: int) -> int:
    # splitmix64 output finalizer
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance splitmix64 by one step; returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    return state, _mix(state)


def derive_seed(seed: int, *words: int) -> int:
    """Fold integer tag words into a seed, one finalizer round per word."""
    x = seed & _MASK64
    for w in words:
        x = _mix(x ^ _mix(w & _MASK64))
    return x


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Scalar xoshiro256** stream; integer helpers are rejection-sampled."""

    def __init__(self, seed: int):
        s = seed & _MASK64
        state = []
        for _ in range(4):
            s, out = splitmix64_next(s)
            state.append(out)
        self._s = state

    @classmethod
    def from_state(cls, state) -> "Xoshiro256StarStar":
        rng = cls.__new__(cls)
        rng._s = [int(w) & _MASK64 for w in state]
        if len(rng._s) != 4:
            raise ValueError("state must have 4 words")
        return rng

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        span = _MASK64 + 1
        zone = span - span % n
        while True:
            x = self.next_u64()
            if x < zone:
                return x % n

    def shuffle(self, items) -> None:
        """In-place Fisher-Yates shuffle, iterating from the tail."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


# vectorized twin (bit-identical to the scalar path)

def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 wraparound is the point; silence the scalar overflow warning
    with np.errstate(over="ignore"):
        z = z.astype(np.uint64, copy=True)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def derive_seed_array(seed, *words) -> np.ndarray:
    """Vectorized derive_seed; word arguments broadcast against each other."""
    x = np.asarray(seed, dtype=np.uint64)
    for w in words:
        w64 = np.asarray(w, dtype=np.uint64)
        x = _mix_array(x ^ _mix_array(w64))
    return x


def _xoshiro_states(seeds: np.ndarray) -> np.ndarray:
    s = np.asarray(seeds, dtype=np.uint64).copy()
    state = np.empty((4,) + s.shape, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i in range(4):
            s = s + np.uint64(_GOLDEN)
            state[i] = _mix_array(s)
    return state


def _rotl_array(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def xoshiro_next_array(state: np.ndarray) -> np.ndarray:
    """Advance an array of xoshiro256** states in place; returns outputs."""
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    with np.errstate(over="ignore"):
        result = _rotl_array(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    state[3] = _rotl_array(s3, 45)
    return result


def standard_normals_from_seeds(seeds) -> np.ndarray:
    """One standard-normal deviate per seed (independent streams, Box-Muller).

    Each seed opens its own xoshiro256** stream; two 53-bit uniforms are drawn
    and combined. u1 lies in (0, 1] so the log never sees zero.
    """
    state = _xoshiro_states(np.asarray(seeds, dtype=np.uint64))
    o1 = xoshiro_next_array(state)
    o2 = xoshiro_next_array(state)
    u1 = ((o1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (o2 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """count independent normals from streams derived as (seed, 0..count-1)."""
    return standard_normals_from_seeds(derive_seed_array(seed, np.arange(count)))
