"""Counter-based uniform draws addressed by (seed, trial, event).

Each trial owns a SplitMix64 stream keyed by a hash of ``(seed, trial)``.
A draw is identified by its position in that stream, so the value used for a
given event never depends on how trials are batched, vectorised or spread
over threads. The scalar and numpy paths below produce identical bits.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53

# event layout: ((step * 2 + side) * 4 + kind) * MAX_INDEX + index
GENERATE, PURIFY, SWAP = 0, 1, 2
MAX_INDEX = 256


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def trial_key(seed: int, trial: int) -> int:
    return _mix((_mix(seed & MASK64) + GOLDEN * (trial + 1)) & MASK64)


def event_counter(step: int, side: int, kind: int, index: int) -> int:
    return ((step * 2 + side) * 4 + kind) * MAX_INDEX + index


def uniform(key: int, counter: int) -> float:
    """Uniform double in [0, 1) at position ``counter`` of stream ``key``."""
    return (_mix((key + GOLDEN * (counter + 1)) & MASK64) >> 11) * _TWO_M53


class TrialStream:
    """Scalar view of one trial's stream."""

    def __init__(self, seed: int, trial: int):
        self.key = trial_key(seed, trial)

    def draw(self, step: int, side: int, kind: int, index: int = 0) -> float:
        return uniform(self.key, event_counter(step, side, kind, index))


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def trial_keys(seed: int, trials: np.ndarray) -> np.ndarray:
    trials = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64(_mix(seed & MASK64))
        return _mix_array(base + np.uint64(GOLDEN) * (trials + np.uint64(1)))


def uniform_array(keys: np.ndarray, counters) -> np.ndarray:
    """Vectorised :func:`uniform`; ``counters`` broadcasts against ``keys``."""
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix_array(keys + np.uint64(GOLDEN) * (counters + np.uint64(1)))
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_M53
