"""Counter-based pseudo-random generator used everywhere randomness is needed.

Every random draw in this package comes from the 64-bit SplitMix64 sequence so
that runs are reproducible across processes, platforms, and reimplementations.
The generator is a pure counter scheme: draw ``i`` of a stream seeded with
``s`` is ``mix64(s + (i + 1) * GOLDEN)`` where ``mix64`` is the SplitMix64
finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2**64 and ``GOLDEN = 0x9E3779B97F4A7C15``.

Derived quantities:

* uniform double in [0, 1): top 53 bits, ``(u >> 11) * 2**-53``
* integer in [0, n): ``u % n`` (modulo bias < n / 2**64, negligible here)
* standard normal: Box-Muller from two uniforms, where the log argument uses
  ``(u >> 11) + 1) * 2**-53`` so it lies in (0, 1]

Per-worker streams are derived as ``mix64(mix64(seed) ^ (worker_id + 1))`` so
workers draw independent, reproducible sequences from one experiment seed.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = float(2.0**-53)


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int (mod 2**64)."""
    z = x & _MASK
    z = (z ^ (z >> 30)) * _M1 & _MASK
    z = (z ^ (z >> 27)) * _M2 & _MASK
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    # numpy uint64 arithmetic wraps mod 2**64, matching mix64 exactly
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_seed(seed: int, worker_id: int) -> int:
    """Seed of the independent stream owned by ``worker_id``."""
    return mix64(mix64(seed) ^ (worker_id + 1))


class CounterRng:
    """Deterministic counter-based generator (see module docstring).

    The state is just (seed, counter); copies and restarts are trivial and
    two instances with equal state produce identical streams forever.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & _MASK
        self.counter = counter

    def clone(self) -> "CounterRng":
        return CounterRng(self.seed, self.counter)

    def _raw_block(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        base = np.uint64(self.seed) + idx * np.uint64(GOLDEN)
        return _mix64_vec(base)

    def u64(self) -> int:
        return int(self._raw_block(1)[0])

    def uniform_block(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self._raw_block(n) >> np.uint64(11)).astype(np.float64) * _INV53

    def uniform(self) -> float:
        return float(self.uniform_block(1)[0])

    def randint_block(self, n: int, upper: int) -> np.ndarray:
        """n integers uniform in [0, upper)."""
        if upper <= 0:
            raise ValueError(f"upper bound must be positive, got {upper}")
        return (self._raw_block(n) % np.uint64(upper)).astype(np.int64)

    def randint(self, upper: int) -> int:
        return int(self.randint_block(1, upper)[0])

    def normal_block(self, n: int) -> np.ndarray:
        """n standard normal deviates via Box-Muller (two draws per value)."""
        u1 = ((self._raw_block(n) >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
        u2 = self.uniform_block(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def worker_rng(seed: int, worker_id: int) -> CounterRng:
    """Fresh generator for one worker's private stream."""
    return CounterRng(stream_seed(seed, worker_id))
