"""Counter-based random numbers for reproducible parallel simulation.

Every draw is a pure function of ``(seed, trial, slot)``: the counter is
packed into one 64-bit word and pushed through two rounds of the SplitMix64
finaliser keyed by the seed. Trials can therefore be computed in any order
and on any number of workers with identical results.
"""

from __future__ import annotations

import numpy as np

SLOT_BITS = 20
MAX_SLOTS = 1 << SLOT_BITS
MAX_TRIALS = 1 << (64 - SLOT_BITS)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


class CounterRNG:
    """Stateless generator: ``bits(trials, slot)`` depends only on its arguments and the seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        with np.errstate(over="ignore"):
            s = np.array([self.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
            self._k1 = _mix(s + _GOLDEN)[0]
            self._k2 = _mix(s ^ self._k1)[0]

    def bits(self, trials: np.ndarray, slot: int) -> np.ndarray:
        if not 0 <= slot < MAX_SLOTS:
            raise ValueError(f"slot {slot} outside [0, {MAX_SLOTS})")
        t = np.asarray(trials, dtype=np.uint64)
        with np.errstate(over="ignore"):
            ctr = (t << np.uint64(SLOT_BITS)) | np.uint64(slot)
            return _mix(_mix(ctr ^ self._k1) + self._k2)

    def uniform(self, trials: np.ndarray, slot: int) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits."""
        return (self.bits(trials, slot) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def integers(self, trials: np.ndarray, slot: int, n) -> np.ndarray:
        """Integers in ``[0, n)``; ``n`` may be a scalar or broadcast per trial."""
        return np.floor(self.uniform(trials, slot) * np.asarray(n, dtype=np.float64)).astype(np.int64)
