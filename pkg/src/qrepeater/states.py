"""Noisy Bell-state families and their fidelity under memory decoherence."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class StateFamily(str, enum.Enum):
    DEPHASED = "dephased"
    WERNER = "werner"


@dataclass(frozen=True)
class NoisyBellState:
    """Bell-diagonal two-qubit state characterised by its fidelity to Phi+.

    Dephased states carry weights ``{F, 1-F}`` on ``{Phi+, Phi-}``; Werner
    states spread ``1-F`` evenly over the three other Bell states.
    """

    family: StateFamily
    fidelity: float

    def __post_init__(self):
        if not isinstance(self.family, StateFamily):
            object.__setattr__(self, "family", StateFamily(self.family))
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity must lie in [0, 1], got {self.fidelity!r}")

    def bell_weights(self) -> tuple[float, float, float, float]:
        """Weights on (Phi+, Phi-, Psi+, Psi-)."""
        f = self.fidelity
        if self.family is StateFamily.DEPHASED:
            return (f, 1.0 - f, 0.0, 0.0)
        e = (1.0 - f) / 3.0
        return (f, e, e, e)


@dataclass(frozen=True)
class MemoryQuality:
    """Per-step memory decoherence factor ``beta = exp(-2 kappa tau)``."""

    beta: float
    kappa: float
    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa!r}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta!r}")


def make_state(family: StateFamily | str, F: float) -> NoisyBellState:
    return NoisyBellState(StateFamily(family), float(F))


def quality_factor(kappa: float, tau: float) -> MemoryQuality:
    """Build the memory quality for decoherence rate ``kappa`` (1/s) and step ``tau`` (s)."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa!r}")
    return MemoryQuality(math.exp(-2.0 * kappa * tau), float(kappa), float(tau))


def decay_fidelity(family: StateFamily, F, beta_n):
    """Fidelity after storage, given ``beta_n = beta**n``.

    Works elementwise on floats or numpy arrays; the protocol engine relies
    on both paths evaluating the identical expression.
    """
    if family is StateFamily.DEPHASED:
        return F * (1.0 + 2.0 * beta_n) / 3.0 + (1.0 - beta_n) / 6.0
    return F * beta_n + (1.0 - beta_n) / 4.0


def decay(state: NoisyBellState, n_steps: int, q: MemoryQuality) -> NoisyBellState:
    """Let ``state`` idle in memory for ``n_steps`` time steps."""
    if n_steps < 0:
        raise ValueError(f"n_steps must be non-negative, got {n_steps!r}")
    if n_steps == 0:
        return state
    f = decay_fidelity(state.family, state.fidelity, q.beta ** int(n_steps))
    return NoisyBellState(state.family, min(1.0, max(0.0, f)))
