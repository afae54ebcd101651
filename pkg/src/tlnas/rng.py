"""Deterministic randomness for every stochastic step in the toolkit.

Seeds are plain 64-bit integers.  Streams are backed by numpy's Philox
4x64 counter generator, so a draw depends only on (seed, position) and
never on thread scheduling, platform word size, or numpy's global state.

Seed plumbing is hierarchical: ``derive_seed(master, a, b, ...)`` folds
the parts one at a time through a splitmix64 step, which gives the
composition property

    derive_seed(derive_seed(m, a), b) == derive_seed(m, a, b)

so a harness can hand a sub-component a derived seed and let it derive
further without anyone knowing the full path.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_UINT64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)
_TO_UNIT = 2.0 ** -53


def _mix64(z: int) -> int:
    """splitmix64 finaliser: a fixed 64-bit bijection with good avalanche."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Fold integer parts into a child seed.

    The first part is the parent seed; each further part is hashed in
    with a splitmix64 step.  Plain addition (seed + i) is deliberately
    avoided: adjacent parents would produce overlapping child streams.
    """
    if not parts:
        raise ValueError("derive_seed needs at least one part")
    seed = parts[0] & _MASK64
    for part in parts[1:]:
        seed = _mix64(((seed + _GOLDEN) & _MASK64) ^ _mix64(part & _MASK64))
    return seed


def str_seed(name: str) -> int:
    """Hash a label to a 64-bit seed part (FNV-1a over UTF-8, then mixed)."""
    h = _FNV_OFFSET
    for byte in name.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return _mix64(h)


class RandomStream:
    """A private, seekable-free stream of uniform draws.

    Each stream owns one Philox instance keyed by its seed.  Streams
    with distinct seeds are statistically independent, which is what the
    per-run / per-tensor seed derivation relies on.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._bits = np.random.Philox(key=self.seed)

    def raw(self, n: int) -> np.ndarray:
        """Next n raw 64-bit words as a uint64 array."""
        return self._bits.random_raw(n)

    def uniform(self, shape: int | tuple[int, ...] | None = None):
        """Uniform float64 draws in [0, 1).

        Uses the top 53 bits of each word, the standard double mapping.
        Returns a scalar when shape is None.
        """
        if shape is None:
            return float((int(self.raw(1)[0]) >> 11) * _TO_UNIT)
        if isinstance(shape, int):
            shape = (shape,)
        n = 1
        for dim in shape:
            n *= int(dim)
        out = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TO_UNIT
        return out.reshape(shape)

    def _randbelow_vec(self, bounds: np.ndarray) -> np.ndarray:
        """One exact-uniform integer in [0, bounds[i]) per entry.

        Rejection sampling on raw words; with 64-bit words and small
        bounds the reject probability is ~b/2^64, so the loop all but
        never iterates twice.
        """
        if np.any(bounds <= 0):
            raise ValueError("bounds must be positive")
        out = np.empty(len(bounds), dtype=np.int64)
        pending = np.arange(len(bounds))
        while pending.size:
            raws = self.raw(pending.size)
            b = bounds[pending].astype(np.uint64)
            rem = (_UINT64_MAX % b + np.uint64(1)) % b  # 2^64 mod b
            ok = raws <= _UINT64_MAX - rem
            out[pending[ok]] = (raws[ok] % b[ok]).astype(np.int64)
            pending = pending[~ok]
        return out

    def randbelow(self, n: int) -> int:
        """Exact-uniform integer in [0, n)."""
        return int(self._randbelow_vec(np.asarray([n], dtype=np.int64))[0])

    def sample_without_replacement(self, population: int, k: int) -> np.ndarray:
        """k distinct indices drawn uniformly from range(population).

        Partial Fisher-Yates.  The first j outputs depend only on the
        first j steps, so for a fresh stream the k=10 sample is a prefix
        of the k=100 sample under the same seed.
        """
        if not 0 <= k <= population:
            raise ValueError(f"cannot sample {k} from population {population}")
        idx = np.arange(population, dtype=np.int64)
        if k == 0:
            return idx[:0]
        steps = min(k, population - 1)
        jumps = self._randbelow_vec(population - np.arange(steps, dtype=np.int64))
        for i in range(steps):
            j = i + int(jumps[i])
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k].copy()

    def permutation(self, n: int) -> np.ndarray:
        return self.sample_without_replacement(n, n)
