"""Rains bound, entanglement distribution rate and buffer-time optimisation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from qrepeater.protocol import BatchResult, SimConfig, run_sweep


def binary_entropy(x: float) -> float:
    """Base-2 binary entropy with ``H(0) = H(1) = 0``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def rains_bound(F: float) -> float:
    """Distillable-entanglement upper bound of a Bell-diagonal state, in ebits.

    Clamped to zero at ``F <= 1/2``, where nothing can be distilled.
    """
    if not 0.0 <= F <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {F!r}")
    if F <= 0.5:
        return 0.0
    return max(0.0, 1.0 - binary_entropy(F))


def _rains_slope(F: float) -> float:
    if F <= 0.5 or F >= 1.0:
        return 0.0
    return math.log2(F / (1.0 - F))


@dataclass(frozen=True)
class RateResult:
    N_buffer: int
    p_succ: float
    mean_fidelity: Optional[float]
    rains: float
    rate: float
    per_memory_rate: float
    trials: int = 0
    successes: int = 0
    rate_stderr: float = 0.0

    def interval(self, k: float = 3.0) -> tuple[float, float]:
        return (self.rate - k * self.rate_stderr, self.rate + k * self.rate_stderr)

    def per_memory_interval(self, M: int, k: float = 3.0) -> tuple[float, float]:
        lo, hi = self.interval(k)
        return (lo / M, hi / M)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def rate_from_counts(N_buffer: int, trials: int, fidelities: np.ndarray, tau: float, M: int) -> RateResult:
    """Average rate ``p_succ * R(F_mean) / (N_buffer * tau)`` in ebits per second.

    ``rate_stderr`` is a first-order (delta method) standard error that
    combines the binomial error of ``p_succ`` with the error of the mean
    fidelity.
    """
    fidelities = np.asarray(fidelities, dtype=float)
    k = len(fidelities)
    p = k / trials
    t_buffer = N_buffer * tau
    if k == 0:
        return RateResult(N_buffer, 0.0, None, 0.0, 0.0, 0.0, trials, 0, 0.0)
    f_mean = float(np.mean(fidelities))
    f_mean = min(1.0, max(0.0, f_mean))
    rains = rains_bound(f_mean)
    rate = p * rains / t_buffer
    var_p = p * (1.0 - p) / trials
    var_f = float(np.var(fidelities, ddof=1)) / k if k > 1 else 0.0
    stderr = math.sqrt((rains**2) * var_p + (p * _rains_slope(f_mean)) ** 2 * var_f) / t_buffer
    return RateResult(N_buffer, p, f_mean, rains, rate, rate / M, trials, k, stderr)


def rate_from_batch(batch: BatchResult, cfg: SimConfig) -> RateResult:
    return rate_from_counts(batch.N_buffer, batch.trials, batch.fidelity_samples,
                            cfg.quality.tau, cfg.M)


def optimize_buffer(cfg: SimConfig, N_range: Iterable[int] = range(1, 31), threads: int = 1,
                    return_batches: bool = False):
    """Sweep the buffer length and pick the rate-maximising one.

    Returns ``(best, sweep)`` where ``sweep`` lists one :class:`RateResult`
    per buffer length in increasing order; ties go to the shortest buffer.
    With ``return_batches`` the raw :class:`BatchResult` dict is appended.
    """
    N_values = sorted(set(int(n) for n in N_range))
    if not N_values or N_values[0] < 1:
        raise ValueError("N_range must contain positive integers")
    batches = run_sweep(cfg, N_values, threads=threads)
    sweep = [rate_from_batch(batches[n], cfg) for n in N_values]
    best = sweep[0]
    for r in sweep[1:]:
        if r.rate > best.rate:
            best = r
    if return_batches:
        return best, sweep, batches
    return best, sweep


def fidelity_density(samples, bins: int = 200) -> list[tuple[float, float]]:
    """Normalised histogram of ``samples`` over ``[0, 1]``.

    Returns ``(bin_center, density)`` pairs; empty input gives an empty list.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins!r}")
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return []
    if samples.min() < 0.0 or samples.max() > 1.0:
        raise ValueError("fidelity samples must lie in [0, 1]")
    density, edges = np.histogram(samples, bins=bins, range=(0.0, 1.0), density=True)
    centers = (edges[:-1] + edges[1:]) / 2
    return list(zip(centers.tolist(), density.tolist()))


def find_modes(density: list[tuple[float, float]], min_separation: int = 6,
               min_prominence: float = 0.0) -> list[tuple[float, float]]:
    """Local maxima of a binned density, highest first.

    A bin is a mode when it is the maximum within ``min_separation - 1`` bins
    on either side and stands at least ``min_prominence`` above the lowest
    bin between it and any higher mode (topographic prominence).
    """
    from scipy.signal import find_peaks

    if not density:
        return []
    x = np.array([c for c, _ in density])
    y = np.array([d for _, d in density])
    padded = np.concatenate([[0.0], y, [0.0]])
    idx, _ = find_peaks(padded, distance=min_separation, prominence=min_prominence)
    idx = idx - 1
    idx = idx[np.argsort(-y[idx], kind="stable")]
    return [(float(x[i]), float(y[i])) for i in idx]
