"""Brute-force density-matrix reference for the closed-form models.

Everything here works on dense ``complex128`` arrays of shape ``(2**n, 2**n)``
with qubit 0 as the most significant tensor factor. The code favours clarity
over speed; it only ever handles up to four qubits.

Circuit conventions
-------------------
Swapping acts on ``rho1 (x) rho2`` with qubit order (end A, station, station,
end C): noisy CNOT 1->2, noiseless Hadamard on 1, noisy Z measurements of 1
and 2, Pauli correction ``Z**m1 X**m2`` on qubit 3.

Purification acts on ``kept (x) sacrificed`` with qubit order (kept A, kept B,
sacrificed A, sacrificed B). Each pair first receives a noiseless Hadamard on
both qubits, which turns phase flips into bit flips and leaves Werner states
alone, then one noisy CNOT per node with the kept qubit as control, then noisy
Z measurements of both sacrificed qubits; the round succeeds on equal
outcomes. The Hadamards are undone on the survivor.
"""

from __future__ import annotations

import numpy as np

from qrepeater.ops import OperationNoise, PERFECT, _check_pair
from qrepeater.states import NoisyBellState, StateFamily

_S = 1.0 / np.sqrt(2.0)

KET_PHI_PLUS = np.array([_S, 0, 0, _S], dtype=complex)
KET_PHI_MINUS = np.array([_S, 0, 0, -_S], dtype=complex)
KET_PSI_PLUS = np.array([0, _S, _S, 0], dtype=complex)
KET_PSI_MINUS = np.array([0, _S, -_S, 0], dtype=complex)
BELL_KETS = (KET_PHI_PLUS, KET_PHI_MINUS, KET_PSI_PLUS, KET_PSI_MINUS)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _S
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def projector(ket: np.ndarray) -> np.ndarray:
    return np.outer(ket, ket.conj())


def n_qubits(rho: np.ndarray) -> int:
    n = int(round(np.log2(rho.shape[0])))
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or 2**n != rho.shape[0]:
        raise ValueError(f"not a qubit density matrix: shape {rho.shape}")
    return n


def check_density(rho: np.ndarray, atol_herm=1e-12, atol_trace=1e-12, atol_psd=1e-10):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    n_qubits(rho)
    if np.max(np.abs(rho - rho.conj().T)) > atol_herm:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol_trace:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -atol_psd:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def bell_diagonal_density(s: NoisyBellState) -> np.ndarray:
    return sum(w * projector(k) for w, k in zip(s.bell_weights(), BELL_KETS))


def fidelity_to_phi_plus(rho: np.ndarray) -> float:
    if rho.shape != (4, 4):
        raise ValueError(f"expected a two-qubit density matrix, got shape {rho.shape}")
    return float(np.real(KET_PHI_PLUS.conj() @ rho @ KET_PHI_PLUS))


def _check_qubits(n, qubits):
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"qubit indices must be distinct: {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")


def apply_unitary(rho: np.ndarray, U: np.ndarray, qubits) -> np.ndarray:
    """Conjugate ``rho`` by ``U`` acting on ``qubits`` (in that order)."""
    n = n_qubits(rho)
    qubits = list(qubits)
    _check_qubits(n, qubits)
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    perm = qubits + rest
    inv = np.argsort(perm)
    t = rho.reshape((2,) * (2 * n))
    t = t.transpose(perm + [n + q for q in perm]).reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    t = np.einsum("ab,bxcy,dc->axdy", U, t, U.conj())
    t = t.reshape((2,) * (2 * n)).transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def partial_trace(rho: np.ndarray, traced) -> np.ndarray:
    """Trace out ``traced`` qubits; the rest keep their relative order."""
    n = n_qubits(rho)
    traced = sorted(set(traced))
    _check_qubits(n, traced)
    t = rho.reshape((2,) * (2 * n))
    for removed, q in enumerate(traced):
        m = n - removed
        t = np.trace(t, axis1=q - removed, axis2=q - removed + m)
    keep = 2 ** (n - len(traced))
    return t.reshape(keep, keep)


def _embed_maximally_mixed(reduced: np.ndarray, qubits, n: int) -> np.ndarray:
    """Return ``I/2**k`` on ``qubits`` tensored with ``reduced`` on the rest."""
    k = len(qubits)
    full = np.kron(np.eye(2**k, dtype=complex) / 2**k, reduced)
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    inv = list(np.argsort(order))
    t = full.reshape((2,) * (2 * n)).transpose(inv + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def apply_depolarizing(rho: np.ndarray, qubit: int, lam: float) -> np.ndarray:
    """``lam * rho + (1 - lam) * I/2 (x) tr_qubit(rho)`` on a single qubit."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam!r}")
    n = n_qubits(rho)
    _check_qubits(n, [qubit])
    mixed = _embed_maximally_mixed(partial_trace(rho, [qubit]), [qubit], n)
    return lam * rho + (1.0 - lam) * mixed


def apply_dephasing(rho: np.ndarray, qubit: int, q: float) -> np.ndarray:
    """Pauli-Z channel ``(1 - q) rho + q Z rho Z``."""
    return (1.0 - q) * rho + q * apply_unitary(rho, Z, [qubit])


def noisy_gate(rho: np.ndarray, gate: np.ndarray, qubits, p: float) -> np.ndarray:
    """Two-qubit gate that works with probability ``p`` and depolarises its qubits otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    n = n_qubits(rho)
    qubits = list(qubits)
    _check_qubits(n, qubits)
    ideal = apply_unitary(rho, gate, qubits)
    if p == 1.0:
        return ideal
    mixed = _embed_maximally_mixed(partial_trace(rho, qubits), qubits, n)
    return p * ideal + (1.0 - p) * mixed


def _measure_branches(rho: np.ndarray, qubit: int, eta: float):
    """Unnormalised remaining states for reported outcomes 0 and 1."""
    n = n_qubits(rho)
    _check_qubits(n, [qubit])
    t = rho.reshape((2,) * (2 * n))
    true = []
    for b in (0, 1):
        sel = [slice(None)] * (2 * n)
        sel[qubit] = b
        sel[n + qubit] = b
        m = n - 1
        true.append(t[tuple(sel)].reshape(2**m, 2**m))
    return {
        0: eta * true[0] + (1.0 - eta) * true[1],
        1: eta * true[1] + (1.0 - eta) * true[0],
    }


def noisy_measure(rho: np.ndarray, qubit: int, eta: float) -> dict:
    """Imperfect Z measurement that reports the right bit with probability ``eta``.

    Returns ``{outcome: (probability, remaining_state)}``; the measured qubit
    is traced out. Zero-probability outcomes carry ``None`` as their state.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    out = {}
    for outcome, sigma in _measure_branches(rho, qubit, eta).items():
        prob = float(np.real(np.trace(sigma)))
        out[outcome] = (prob, sigma / prob if prob > 0 else None)
    return out


def twirl(rho: np.ndarray, family: StateFamily) -> NoisyBellState:
    """Project a two-qubit state onto ``family`` keeping its Phi+ overlap."""
    f = min(1.0, max(0.0, fidelity_to_phi_plus(rho)))
    return NoisyBellState(family, f)


def swap_output(s1: NoisyBellState, s2: NoisyBellState, noise: OperationNoise = PERFECT) -> np.ndarray:
    """Outcome-averaged end-to-end state (qubits A, C) after correction."""
    _check_pair(s1, s2, noise)
    rho = np.kron(bell_diagonal_density(s1), bell_diagonal_density(s2))
    rho = noisy_gate(rho, CNOT, (1, 2), noise.p_gate)
    rho = apply_unitary(rho, H, [1])
    out = np.zeros((4, 4), dtype=complex)
    for m1, sigma in _measure_branches(rho, 1, noise.eta_meas).items():
        # old qubit 2 is now qubit 1
        for m2, tau in _measure_branches(sigma, 1, noise.eta_meas).items():
            corr = np.linalg.matrix_power(Z, m1) @ np.linalg.matrix_power(X, m2)
            out = out + apply_unitary(tau, corr, [1])
    return out


def oracle_swap(s1: NoisyBellState, s2: NoisyBellState, noise: OperationNoise = PERFECT) -> float:
    """Average Phi+ fidelity of the corrected end-to-end pair."""
    return fidelity_to_phi_plus(swap_output(s1, s2, noise))


def _basis_change(rho: np.ndarray, qubit_a: int, qubit_b: int) -> np.ndarray:
    return apply_unitary(apply_unitary(rho, H, [qubit_a]), H, [qubit_b])


def purify_output(kept: NoisyBellState, sacrificed: NoisyBellState, noise: OperationNoise = PERFECT):
    """Return ``(success_prob, rho)`` with ``rho`` the normalised surviving pair."""
    _check_pair(kept, sacrificed, noise)
    rho = np.kron(bell_diagonal_density(kept), bell_diagonal_density(sacrificed))
    rho = _basis_change(rho, 0, 1)
    rho = _basis_change(rho, 2, 3)
    rho = noisy_gate(rho, CNOT, (0, 2), noise.p_gate)
    rho = noisy_gate(rho, CNOT, (1, 3), noise.p_gate)
    success = np.zeros((4, 4), dtype=complex)
    for ma, sigma in _measure_branches(rho, 2, noise.eta_meas).items():
        for mb, tau in _measure_branches(sigma, 2, noise.eta_meas).items():
            if ma == mb:
                success = success + tau
    ps = float(np.real(np.trace(success)))
    if ps <= 0:
        return 0.0, None
    out = _basis_change(success / ps, 0, 1)
    return ps, out


def oracle_purify(kept: NoisyBellState, sacrificed: NoisyBellState, noise: OperationNoise = PERFECT):
    """Return ``(success_prob, out_fidelity)`` of the brute-force purification circuit."""
    ps, out = purify_output(kept, sacrificed, noise)
    if out is None:
        return 0.0, kept.fidelity
    return ps, twirl(out, kept.family).fidelity


def oracle_decay_werner(F: float, kappa: float, t: float) -> float:
    """Werner pair stored for time ``t`` under per-qubit depolarising noise."""
    lam = float(np.exp(-kappa * t))
    rho = bell_diagonal_density(NoisyBellState(StateFamily.WERNER, F))
    rho = apply_depolarizing(apply_depolarizing(rho, 0, lam), 1, lam)
    return fidelity_to_phi_plus(rho)


def oracle_decay_dephased(F: float, kappa: float, t: float) -> float:
    """Dephased pair stored for time ``t`` under per-qubit Pauli-Z noise.

    Off-diagonal coherences of each qubit shrink by ``exp(-kappa t)``.
    """
    q = (1.0 - float(np.exp(-kappa * t))) / 2.0
    rho = bell_diagonal_density(NoisyBellState(StateFamily.DEPHASED, F))
    rho = apply_dephasing(apply_dephasing(rho, 0, q), 1, q)
    return fidelity_to_phi_plus(rho)
