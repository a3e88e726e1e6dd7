"""Closed-form versus density-matrix comparison grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from qrepeater import oracle
from qrepeater.ops import OperationNoise, purify, swap
from qrepeater.states import StateFamily, decay, make_state, quality_factor

FIDELITY_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
NOISE_GRID = (0.8, 0.9, 1.0)
DECAY_STEPS = (0, 1, 10, 100)
KAPPA, TAU = 1.0, 1e-3

# The dephased storage model is applied as written; it only coincides with
# two-sided Pauli-Z noise at F = 1, so rows with F < 1 are informational.
KNOWN_DISCREPANCIES = {"decay_dephased"}


@dataclass(frozen=True)
class Check:
    formula: str
    family: str
    F1: float
    F2: Optional[float]
    p_gate: Optional[float]
    eta_meas: Optional[float]
    n_steps: Optional[int]
    closed_form: float
    oracle: float

    @property
    def abs_diff(self) -> float:
        return abs(self.closed_form - self.oracle)

    def known(self) -> bool:
        return self.formula in KNOWN_DISCREPANCIES and self.F1 < 1.0

    def status(self, tol: float) -> str:
        if self.abs_diff <= tol:
            return "pass"
        return "known" if self.known() else "FAIL"


def _operation_checks():
    W, D = StateFamily.WERNER, StateFamily.DEPHASED
    for F1, F2 in itertools.product(FIDELITY_GRID, repeat=2):
        a, b = make_state(D, F1), make_state(D, F2)
        yield Check("swap_dephased", "dephased", F1, F2, 1.0, 1.0, None,
                    swap(a, b).fidelity, oracle.oracle_swap(a, b))
        res = purify(a, b)
        ps, fo = oracle.oracle_purify(a, b)
        yield Check("purify_dephased_prob", "dephased", F1, F2, 1.0, 1.0, None, res.success_prob, ps)
        yield Check("purify_dephased_fidelity", "dephased", F1, F2, 1.0, 1.0, None,
                    res.out_state.fidelity, fo)
        a, b = make_state(W, F1), make_state(W, F2)
        for p, eta in itertools.product(NOISE_GRID, repeat=2):
            noise = OperationNoise(p, eta)
            tag = "" if noise.perfect else "_noisy"
            yield Check("swap_werner" + tag, "werner", F1, F2, p, eta, None,
                        swap(a, b, noise).fidelity, oracle.oracle_swap(a, b, noise))
            res = purify(a, b, noise)
            ps, fo = oracle.oracle_purify(a, b, noise)
            yield Check("purify_werner_prob" + tag, "werner", F1, F2, p, eta, None, res.success_prob, ps)
            yield Check("purify_werner_fidelity" + tag, "werner", F1, F2, p, eta, None,
                        res.out_state.fidelity, fo)


def _decay_checks():
    q = quality_factor(KAPPA, TAU)
    for F, n in itertools.product(FIDELITY_GRID + (0.25,), DECAY_STEPS):
        t = n * TAU
        w = decay(make_state(StateFamily.WERNER, F), n, q).fidelity
        yield Check("decay_werner", "werner", F, None, None, None, n, w,
                    oracle.oracle_decay_werner(F, KAPPA, t))
        d = decay(make_state(StateFamily.DEPHASED, F), n, q).fidelity
        yield Check("decay_dephased", "dephased", F, None, None, None, n, d,
                    oracle.oracle_decay_dephased(F, KAPPA, t))


def verification_checks() -> list[Check]:
    return list(_operation_checks()) + list(_decay_checks())


def failures(checks, tol: float) -> list[Check]:
    return [c for c in checks if c.status(tol) == "FAIL"]


def write_report(checks, tol: float, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["formula", "family", "F1", "F2", "p_gate", "eta_meas", "n_steps",
                    "closed_form", "oracle", "abs_diff", "status"])
        for c in checks:
            w.writerow([c.formula, c.family, _g(c.F1), _g(c.F2), _g(c.p_gate), _g(c.eta_meas),
                        "" if c.n_steps is None else c.n_steps, _g(c.closed_form), _g(c.oracle),
                        _g(c.abs_diff), c.status(tol)])


def _g(x) -> str:
    return "" if x is None else format(float(x), ".17g")
