"""Time-stepped Monte Carlo engine for a three-node repeater with buffer time.

Each end node holds ``M`` memories; each memory is paired with one memory at
the middle station, so the left and right links evolve independently until
the single swap at the end of the buffer window.

A window of ``N_buffer`` steps runs as follows. At step ``k`` every side first
purifies while it holds two or more pairs (the two earliest-created pairs go
first, the later one is kept), then every free memory attempts generation.
After step ``N_buffer - 1`` one final purification round runs at step
``N_buffer`` and, if both sides hold a pair, the swap is attempted.

Stored fidelities are refreshed lazily: a pair is decayed by the number of
steps since its last update only right before it enters an operation.

Two implementations share the draw addresses of :mod:`qrepeater.streams` and
the formulas of :mod:`qrepeater.ops`, so they agree bit for bit:

- :func:`run_trial` walks one trial with plain Python objects and can emit
  an event trace;
- :func:`run_sweep` / :func:`run_batch` advance all trials at once with
  numpy. Windows of different length share their first steps, so a sweep
  over ``N_buffer`` simulates the longest window once and reads every
  shorter window off the way.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from qrepeater import streams
from qrepeater.ops import (
    GenerationParams,
    OperationNoise,
    UnsupportedConfiguration,
    gen_success_prob,
    purify,
    purify_fidelity,
    swap,
    swap_fidelity,
)
from qrepeater.states import (
    MemoryQuality,
    NoisyBellState,
    StateFamily,
    decay,
    decay_fidelity,
    quality_factor,
)

FAILED = -1.0
MAX_MEMORIES = streams.MAX_INDEX - 1
CHUNK = 25_000


class Side(enum.IntEnum):
    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class StoredPair:
    side: Side
    state: NoisyBellState
    created_step: int
    last_update_step: int


@dataclass(frozen=True)
class SimConfig:
    family: StateFamily = StateFamily.WERNER
    gen: GenerationParams = field(default_factory=GenerationParams)
    noise: OperationNoise = field(default_factory=OperationNoise)
    quality: MemoryQuality = field(default_factory=lambda: quality_factor(1.0, 1e-3))
    M: int = 1
    N_buffer: int = 10
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", StateFamily(self.family))
        if self.family is StateFamily.DEPHASED and not self.noise.perfect:
            raise UnsupportedConfiguration(
                "dephased states require perfect operations (p_gate = eta_meas = 1)"
            )
        if not 1 <= self.M <= MAX_MEMORIES:
            raise ValueError(f"M must lie in [1, {MAX_MEMORIES}], got {self.M!r}")
        if self.N_buffer < 1:
            raise ValueError(f"N_buffer must be >= 1, got {self.N_buffer!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def p_gen(self) -> float:
        return gen_success_prob(self.gen)

    @property
    def t_buffer(self) -> float:
        return self.N_buffer * self.quality.tau


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    fidelity: float
    purifications_left: int = 0
    purifications_right: int = 0


# ---------------------------------------------------------------------------
# scalar engine


Trace = Callable[[dict], None]


def _refresh(pair: StoredPair, step: int, q: MemoryQuality) -> StoredPair:
    if pair.last_update_step == step:
        return pair
    state = decay(pair.state, step - pair.last_update_step, q)
    return StoredPair(pair.side, state, pair.created_step, step)


def _purification_phase(cfg, slots, side, step, stream, trace):
    attempts = 0
    while True:
        held = [j for j, p in enumerate(slots) if p is not None]
        if len(held) < 2:
            return attempts
        held.sort(key=lambda j: (slots[j].created_step, j))
        j_sac, j_keep = held[0], held[1]
        sac = _refresh(slots[j_sac], step, cfg.quality)
        keep = _refresh(slots[j_keep], step, cfg.quality)
        res = purify(keep.state, sac.state, cfg.noise)
        u = stream.draw(step, side, streams.PURIFY, attempts)
        attempts += 1
        ok = u < res.success_prob
        slots[j_sac] = None
        slots[j_keep] = StoredPair(side, res.out_state, keep.created_step, step) if ok else None
        if trace:
            trace({
                "event": "purify", "step": step, "side": Side(side), "kept_slot": j_keep,
                "sacrificed_slot": j_sac, "kept_fidelity": keep.state.fidelity,
                "sacrificed_fidelity": sac.state.fidelity, "success_prob": res.success_prob,
                "success": ok, "fidelity": res.out_state.fidelity if ok else None,
            })


def _generation_phase(cfg, slots, side, step, stream, trace, p_gen):
    for j, pair in enumerate(slots):
        if pair is not None:
            continue
        if stream.draw(step, side, streams.GENERATE, j) < p_gen:
            slots[j] = StoredPair(side, NoisyBellState(cfg.family, cfg.gen.F0), step, step)
            if trace:
                trace({"event": "generate", "step": step, "side": Side(side), "slot": j,
                       "fidelity": cfg.gen.F0})


def run_trial(cfg: SimConfig, trial: int = 0, trace: Optional[Trace] = None) -> TrialOutcome:
    """Simulate one buffer window.

    The random stream is derived from ``(cfg.seed, trial)``. ``trace``, when
    given, receives one dict per event (``generate``, ``purify``, ``swap``)
    plus a ``snapshot`` of both sides' memories after every phase.
    """
    stream = streams.TrialStream(cfg.seed, trial)
    p_gen = cfg.p_gen
    memories = [[None] * cfg.M, [None] * cfg.M]
    counts = [0, 0]

    def snapshot(step, phase):
        if trace:
            trace({"event": "snapshot", "step": step, "phase": phase,
                   "memories": [list(m) for m in memories]})

    N = cfg.N_buffer
    for step in range(N + 1):
        for side in (0, 1):
            counts[side] += _purification_phase(cfg, memories[side], side, step, stream, trace)
        snapshot(step, "purify")
        if step == N:
            break
        for side in (0, 1):
            _generation_phase(cfg, memories[side], side, step, stream, trace, p_gen)
        snapshot(step, "generate")

    held = [[p for p in m if p is not None] for m in memories]
    if len(held[0]) != 1 or len(held[1]) != 1:
        if trace:
            trace({"event": "swap", "step": N, "attempted": False, "success": False})
        return TrialOutcome(False, FAILED, counts[0], counts[1])
    left = _refresh(held[0][0], N, cfg.quality)
    right = _refresh(held[1][0], N, cfg.quality)
    ok = stream.draw(N, 0, streams.SWAP) < cfg.gen.p_swap
    fid = swap(left.state, right.state, cfg.noise).fidelity if ok else FAILED
    if trace:
        trace({"event": "swap", "step": N, "attempted": True, "success": ok,
               "left_fidelity": left.state.fidelity, "right_fidelity": right.state.fidelity,
               "fidelity": fid if ok else None})
    return TrialOutcome(ok, fid, counts[0], counts[1])


# ---------------------------------------------------------------------------
# vectorised engine


@dataclass
class BatchResult:
    """Per-trial outcomes of one buffer window, in trial order."""

    N_buffer: int
    success: np.ndarray
    fidelity: np.ndarray
    purifications: np.ndarray  # shape (trials, 2): attempts on left, right

    @property
    def trials(self) -> int:
        return len(self.success)

    @property
    def successes(self) -> int:
        return int(np.count_nonzero(self.success))

    @property
    def p_succ(self) -> float:
        return self.successes / self.trials

    @property
    def fidelity_samples(self) -> np.ndarray:
        return self.fidelity[self.success]

    @property
    def purification_histograms(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.bincount(self.purifications[:, 0]), np.bincount(self.purifications[:, 1]))

    def outcome(self, trial: int) -> TrialOutcome:
        return TrialOutcome(bool(self.success[trial]), float(self.fidelity[trial]),
                            int(self.purifications[trial, 0]), int(self.purifications[trial, 1]))


def _concat(parts: Sequence[BatchResult]) -> BatchResult:
    return BatchResult(
        parts[0].N_buffer,
        np.concatenate([p.success for p in parts]),
        np.concatenate([p.fidelity for p in parts]),
        np.concatenate([p.purifications for p in parts]),
    )


class _Engine:
    def __init__(self, cfg: SimConfig, n_max: int, start: int, stop: int):
        self.cfg = cfg
        self.family = cfg.family
        self.p = cfg.noise.p_gate
        self.eta = cfg.noise.eta_meas
        self.p_gen = cfg.p_gen
        self.beta_pow = np.array([cfg.quality.beta ** n for n in range(n_max + 1)])
        T, M = stop - start, cfg.M
        self.T, self.M = T, M
        self.keys = streams.trial_keys(cfg.seed, np.arange(start, stop))
        self.fid = np.zeros((2, T, M))
        self.created = np.full((2, T, M), -1, dtype=np.int64)
        self.updated = np.zeros((2, T, M), dtype=np.int64)
        self.counts = np.zeros((T, 2), dtype=np.int32)

    def _decayed(self, F, n):
        g = np.clip(decay_fidelity(self.family, F, self.beta_pow[n]), 0.0, 1.0)
        return np.where(n == 0, F, g)

    def purify_side(self, side: int, step: int):
        created, fid, updated = self.created[side], self.fid[side], self.updated[side]
        attempts = np.zeros(self.T, dtype=np.int64)
        slot_ids = np.arange(self.M)
        base = streams.event_counter(step, side, streams.PURIFY, 0)
        while True:
            occ = created >= 0
            rows = np.flatnonzero(occ.sum(axis=1) >= 2)
            if rows.size == 0:
                return
            order_key = np.where(occ[rows], created[rows] * self.M + slot_ids, np.iinfo(np.int64).max)
            order = np.argsort(order_key, axis=1, kind="stable")
            j_sac, j_keep = order[:, 0], order[:, 1]
            F_sac = self._decayed(fid[rows, j_sac], step - updated[rows, j_sac])
            F_keep = self._decayed(fid[rows, j_keep], step - updated[rows, j_keep])
            with np.errstate(divide="ignore", invalid="ignore"):
                ps, fo = purify_fidelity(self.family, F_keep, F_sac, self.p, self.eta)
            ps = np.clip(ps, 0.0, 1.0)
            fo = np.clip(fo, 0.0, 1.0)
            u = streams.uniform_array(self.keys[rows], base + attempts[rows])
            ok = u < ps
            created[rows, j_sac] = -1
            fid[rows, j_keep] = np.where(ok, fo, fid[rows, j_keep])
            updated[rows, j_keep] = np.where(ok, step, updated[rows, j_keep])
            created[rows, j_keep] = np.where(ok, created[rows, j_keep], -1)
            attempts[rows] += 1
            self.counts[rows, side] += 1

    def generate_side(self, side: int, step: int):
        free = self.created[side] < 0
        base = streams.event_counter(step, side, streams.GENERATE, 0)
        u = streams.uniform_array(self.keys[:, None], base + np.arange(self.M)[None, :])
        new = free & (u < self.p_gen)
        self.created[side][new] = step
        self.updated[side][new] = step
        self.fid[side][new] = self.cfg.gen.F0

    def swap_window(self, N: int) -> BatchResult:
        occ = self.created >= 0
        ready = (occ[0].sum(axis=1) == 1) & (occ[1].sum(axis=1) == 1)
        rows = np.arange(self.T)
        F = []
        for side in (0, 1):
            j = np.argmax(occ[side], axis=1)
            F.append(self._decayed(self.fid[side][rows, j], N - self.updated[side][rows, j]))
        u = streams.uniform_array(self.keys, streams.event_counter(N, 0, streams.SWAP, 0))
        ok = ready & (u < self.cfg.gen.p_swap)
        fs = np.clip(swap_fidelity(self.family, F[0], F[1], self.p, self.eta), 0.0, 1.0)
        return BatchResult(N, ok, np.where(ok, fs, FAILED), self.counts.copy())

    def run(self, windows: Sequence[int]) -> dict[int, BatchResult]:
        wanted = set(windows)
        n_max = max(wanted)
        out = {}
        for step in range(n_max + 1):
            self.purify_side(0, step)
            self.purify_side(1, step)
            if step in wanted:
                out[step] = self.swap_window(step)
            if step < n_max:
                self.generate_side(0, step)
                self.generate_side(1, step)
        return out


def run_sweep(cfg: SimConfig, windows: Sequence[int], threads: int = 1,
              chunk: int = CHUNK) -> dict[int, BatchResult]:
    """Run ``cfg.trials`` trials for every buffer length in ``windows``.

    Results depend only on ``cfg`` (``cfg.N_buffer`` is ignored) and are the
    same for any ``threads`` or ``chunk``.
    """
    windows = sorted(set(int(n) for n in windows))
    if not windows or windows[0] < 1:
        raise ValueError("windows must be a non-empty set of positive integers")
    bounds = [(a, min(a + chunk, cfg.trials)) for a in range(0, cfg.trials, chunk)]

    def work(b):
        return _Engine(cfg, windows[-1], *b).run(windows)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return {n: _concat([p[n] for p in parts]) for n in windows}


def run_batch(cfg: SimConfig, threads: int = 1, chunk: int = CHUNK) -> BatchResult:
    """Run ``cfg.trials`` independent windows of ``cfg.N_buffer`` steps."""
    return run_sweep(cfg, [cfg.N_buffer], threads=threads, chunk=chunk)[cfg.N_buffer]


def analytic_single_memory_success(p_gen: float, p_swap: float, N: int) -> float:
    """Success probability for ``M = 1``, where no purification can happen."""
    return p_swap * (1.0 - (1.0 - p_gen) ** N) ** 2
