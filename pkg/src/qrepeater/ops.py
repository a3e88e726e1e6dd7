"""Closed-form transfer functions for generation, swapping and purification.

Fidelity formulas are written as plain arithmetic so that they evaluate the
same way on Python floats and on numpy arrays (see ``swap_fidelity`` and
``purify_fidelity``); the vectorised protocol engine depends on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from qrepeater.states import NoisyBellState, StateFamily


class UnsupportedConfiguration(ValueError):
    """Raised for combinations with no closed form, e.g. noisy dephased ops."""


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class OperationNoise:
    """Two-qubit gate reliability ``p_gate`` and measurement reliability ``eta_meas``."""

    p_gate: float = 1.0
    eta_meas: float = 1.0

    def __post_init__(self):
        _check_unit("p_gate", self.p_gate)
        _check_unit("eta_meas", self.eta_meas)

    @property
    def perfect(self) -> bool:
        return self.p_gate == 1.0 and self.eta_meas == 1.0


PERFECT = OperationNoise()


@dataclass(frozen=True)
class GenerationParams:
    """Elementary-link parameters.

    Attributes
    ----------
    L0 : float
        Elementary link length in km (end node to swapping station).
    L_att : float
        Fibre attenuation length in km.
    eta_h : float
        Combined coupling and detector efficiency.
    F0 : float
        Raw fidelity of a freshly generated pair.
    p_swap : float
        Success probability of the Bell-state measurement.
    """

    L0: float = 20.0
    L_att: float = 20.0
    eta_h: float = 0.1
    F0: float = 1.0
    p_swap: float = 0.5

    def __post_init__(self):
        if self.L0 <= 0 or self.L_att <= 0:
            raise ValueError("L0 and L_att must be positive")
        _check_unit("eta_h", self.eta_h)
        _check_unit("F0", self.F0)
        _check_unit("p_swap", self.p_swap)


@dataclass(frozen=True)
class PurifyResult:
    success_prob: float
    out_state: NoisyBellState


def gen_success_prob(g: GenerationParams) -> float:
    """Heralded generation probability per attempt, ``exp(-L0/L_att) * eta_h``."""
    return math.exp(-g.L0 / g.L_att) * g.eta_h


def _check_pair(s1: NoisyBellState, s2: NoisyBellState, noise: OperationNoise):
    if s1.family is not s2.family:
        raise ValueError(f"family mismatch: {s1.family.value} vs {s2.family.value}")
    if s1.family is StateFamily.DEPHASED and not noise.perfect:
        raise UnsupportedConfiguration(
            "imperfect operations are only modelled for Werner states"
        )


def swap_fidelity(family: StateFamily, F1, F2, p=1.0, eta=1.0):
    if family is StateFamily.DEPHASED:
        return F1 * F2 + (1.0 - F1) * (1.0 - F2)
    e1 = (1.0 - F1) / 3.0
    e2 = (1.0 - F2) / 3.0
    eta2 = eta * eta
    return (1.0 - p) / 4.0 + p * (
        eta2 * (F1 * F2 + 3.0 * e1 * e2)
        + (1.0 - eta2) * (F1 * e2 + e1 * F2 + 2.0 * e1 * e2)
    )


def purify_fidelity(family: StateFamily, F1, F2, p=1.0, eta=1.0):
    """Return ``(success_prob, fidelity_on_success)``; ``F1`` is the kept pair."""
    if family is StateFamily.DEPHASED:
        ps = F1 * F2 + (1.0 - F1) * (1.0 - F2)
        return ps, F1 * F2 / ps
    e1 = (1.0 - F1) / 3.0
    e2 = (1.0 - F2) / 3.0
    same = eta * eta + (1.0 - eta) * (1.0 - eta)
    flip = 2.0 * eta * (1.0 - eta)
    p2 = p * p
    den = same * (F1 * F2 + F1 * e2 + e1 * F2 + 5.0 * e1 * e2) + flip * (
        2.0 * F1 * e2 + 2.0 * e1 * F2 + 4.0 * e1 * e2
    )
    num = same * (F1 * F2 + e1 * e2) + flip * (F1 * e2 + e1 * e2)
    ps = p2 * den + (1.0 - p2) / 2.0
    # equivalent to the usual form with (1-p^2)/(8p^2) terms, but finite at p=0
    fid = (p2 * num + (1.0 - p2) / 8.0) / ps
    return ps, fid


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def swap(s1: NoisyBellState, s2: NoisyBellState, noise: OperationNoise = PERFECT) -> NoisyBellState:
    """Fidelity of the joined pair after a successful Bell-state measurement.

    The swap success draw (probability ``p_swap``) is made by the caller.
    """
    _check_pair(s1, s2, noise)
    f = swap_fidelity(s1.family, s1.fidelity, s2.fidelity, noise.p_gate, noise.eta_meas)
    return NoisyBellState(s1.family, _clip(f))


def purify(kept: NoisyBellState, sacrificed: NoisyBellState, noise: OperationNoise = PERFECT) -> PurifyResult:
    """One round of 2-to-1 recurrence purification.

    ``kept`` is the control pair that survives on success. The output is
    twirled back into the input family, which leaves its fidelity unchanged.

    Raises
    ------
    ValueError
        If the families differ.
    UnsupportedConfiguration
        For dephased inputs with noisy operations.
    """
    _check_pair(kept, sacrificed, noise)
    try:
        ps, f = purify_fidelity(kept.family, kept.fidelity, sacrificed.fidelity, noise.p_gate, noise.eta_meas)
    except ZeroDivisionError:
        # dephased inputs with orthogonal supports never pass the parity check
        return PurifyResult(0.0, kept)
    return PurifyResult(_clip(ps), NoisyBellState(kept.family, _clip(f)))
