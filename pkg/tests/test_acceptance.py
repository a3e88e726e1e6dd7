"""Acceptance criteria, run at their stated scale and tolerances.

Every test logs a PASS/FAIL line that is printed in the pytest terminal
summary. The Monte Carlo sweeps use 100,000 trials per buffer length, buffer
lengths 1..30 and the default seed 0.
"""

import itertools
import time

import numpy as np
import pytest

from invariants import check_trial
from qrepeater import oracle
from qrepeater.metrics import fidelity_density, find_modes, optimize_buffer
from qrepeater.ops import GenerationParams, OperationNoise, gen_success_prob, purify, swap
from qrepeater.protocol import SimConfig, analytic_single_memory_success, run_batch
from qrepeater.states import StateFamily, decay, make_state, quality_factor

W, D = StateFamily.WERNER, StateFamily.DEPHASED
GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
NOISE = (0.8, 0.9, 1.0)
SEED = 0
TRIALS = 100_000
N_RANGE = range(1, 31)
MEMORIES = (1, 2, 3, 4, 5)
BINS = 200
K_SIGMA = 3.0


# ---------------------------------------------------------------------------
# 1 and 2: closed forms against the density-matrix oracle


def test_1_formula_oracle_equivalence(record):
    worst_ops = 0.0
    for F1, F2 in itertools.product(GRID, GRID):
        for fam in (W, D):
            a, b = make_state(fam, F1), make_state(fam, F2)
            r = purify(a, b)
            ps, fo = oracle.oracle_purify(a, b)
            worst_ops = max(worst_ops, abs(swap(a, b).fidelity - oracle.oracle_swap(a, b)),
                            abs(r.success_prob - ps), abs(r.out_state.fidelity - fo))
        # noisy purification formulas evaluated at p = eta = 1
        a, b = make_state(W, F1), make_state(W, F2)
        r = purify(a, b, OperationNoise(1.0, 1.0))
        ps, fo = oracle.oracle_purify(a, b)
        worst_ops = max(worst_ops, abs(r.success_prob - ps), abs(r.out_state.fidelity - fo))
    q = quality_factor(1.0, 1e-3)
    worst_decay = 0.0
    for F, n in itertools.product(GRID + (0.25,), (0, 1, 10, 100)):
        got = decay(make_state(W, F), n, q).fidelity
        worst_decay = max(worst_decay, abs(got - oracle.oracle_decay_werner(F, 1.0, n * 1e-3)))
    ok = worst_ops <= 1e-10 and worst_decay <= 1e-12
    record("1 formula-oracle equivalence", ok,
           f"max|diff| ops={worst_ops:.2e} (tol 1e-10), decay={worst_decay:.2e} (tol 1e-12)")
    assert ok


def test_2_noisy_formulas_against_oracle(record):
    worst = 0.0
    for F1, F2, p, eta in itertools.product(GRID, GRID, NOISE, NOISE):
        n = OperationNoise(p, eta)
        a, b = make_state(W, F1), make_state(W, F2)
        r = purify(a, b, n)
        ps, fo = oracle.oracle_purify(a, b, n)
        worst = max(worst, abs(swap(a, b, n).fidelity - oracle.oracle_swap(a, b, n)),
                    abs(r.success_prob - ps), abs(r.out_state.fidelity - fo))
    reduce_worst = 0.0
    for F1, F2 in itertools.product(GRID, GRID):
        a, b = make_state(W, F1), make_state(W, F2)
        e1, e2 = (1 - F1) / 3, (1 - F2) / 3
        p_ref = F1 * F2 + (F1 * (1 - F2) + (1 - F1) * F2) / 3 + 5 * (1 - F1) * (1 - F2) / 9
        f_ref = (F1 * F2 + (1 - F1) * (1 - F2) / 9) / p_ref
        r = purify(a, b, OperationNoise(1.0, 1.0))
        reduce_worst = max(reduce_worst, abs(r.success_prob - p_ref), abs(r.out_state.fidelity - f_ref),
                           abs(swap(a, b, OperationNoise(1.0, 1.0)).fidelity - (F1 * F2 + 3 * e1 * e2)))
    ok = worst <= 1e-10 and reduce_worst <= 1e-14
    record("2 noisy formulas vs oracle circuits", ok,
           f"max|diff|={worst:.2e} (tol 1e-10), reduction at p=eta=1: {reduce_worst:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 3: single-memory analytic check


def test_3_single_memory_analytic(record):
    cfg = SimConfig(family=W, gen=GenerationParams(20.0, 20.0, 0.1, 1.0, 0.5), M=1, N_buffer=10,
                    trials=TRIALS, seed=SEED)
    assert gen_success_prob(cfg.gen) == pytest.approx(0.0367879, abs=1e-7)
    t0 = time.perf_counter()
    batch = run_batch(cfg)
    elapsed = time.perf_counter() - t0
    expected = analytic_single_memory_success(cfg.p_gen, 0.5, 10)
    sigma = np.sqrt(expected * (1 - expected) / TRIALS)
    dev = abs(batch.p_succ - expected)
    ok = dev <= K_SIGMA * sigma and abs(batch.p_succ - 0.048825) <= 0.0020 and elapsed < 1.0
    record("3 M=1 analytic success probability", ok,
           f"p_succ={batch.p_succ:.5f} expected={expected:.6f} |dev|={dev:.5f} <= 3sigma={K_SIGMA * sigma:.5f}; "
           f"{elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# 4-6: sweeps


def _sweep(family, noise):
    out = {}
    for M in MEMORIES:
        cfg = SimConfig(family=family, gen=GenerationParams(20.0, 20.0, 0.1, 1.0, 0.5), noise=noise,
                        quality=quality_factor(1.0, 1e-3), M=M, trials=TRIALS, seed=SEED)
        best, sweep, batches = optimize_buffer(cfg, N_RANGE, return_batches=True)
        out[M] = (best, batches[best.N_buffer].fidelity_samples)
    return out


@pytest.fixture(scope="module")
def perfect_sweeps():
    return {fam: _sweep(fam, OperationNoise()) for fam in (D, W)}


@pytest.fixture(scope="module")
def noisy_sweep():
    return _sweep(W, OperationNoise(0.9, 0.9))


def _fmt(results):
    return ", ".join(f"M={M}: N*={b.N_buffer} R={b.rate:.3f}+-{K_SIGMA * b.rate_stderr:.3f}"
                     for M, (b, _) in results.items())


def _rate_increases(results):
    return all(results[m][0].interval(K_SIGMA)[1] < results[m + 1][0].interval(K_SIGMA)[0]
               for m in MEMORIES[:-1])


def _buffer_non_increasing(results):
    n = [results[m][0].N_buffer for m in MEMORIES]
    return all(a >= b for a, b in zip(n, n[1:])), n


@pytest.mark.parametrize("family", [D, W], ids=lambda f: f.value)
def test_4a_optimal_rate_increases_with_memories(perfect_sweeps, family, record):
    res = perfect_sweeps[family]
    ok = _rate_increases(res)
    record(f"4a rate strictly increasing in M ({family.value})", ok, _fmt(res))
    assert ok


@pytest.mark.parametrize("family", [D, W], ids=lambda f: f.value)
def test_4b_per_memory_rate_beats_single_memory(perfect_sweeps, family, record):
    res = perfect_sweeps[family]
    single_hi = res[1][0].interval(K_SIGMA)[1]
    lows = {M: res[M][0].per_memory_interval(M, K_SIGMA)[0] for M in MEMORIES[1:]}
    ok = all(lo > single_hi for lo in lows.values())
    record(f"4b per-memory rate M>=2 above M=1 ({family.value})", ok,
           f"M=1 upper={single_hi:.3f}; lower bounds " + ", ".join(f"M={m}: {v:.3f}" for m, v in lows.items()))
    assert ok


@pytest.mark.parametrize("family", [D, W], ids=lambda f: f.value)
def test_4c_optimal_buffer_non_increasing(perfect_sweeps, family, record):
    ok, n = _buffer_non_increasing(perfect_sweeps[family])
    record(f"4c optimal buffer non-increasing ({family.value})", ok, f"N*={n}")
    assert ok


def test_4d_dephased_beats_werner(perfect_sweeps, record):
    d, w = perfect_sweeps[D], perfect_sweeps[W]
    parts, ok = [], True
    for M in MEMORIES:
        lo_d, hi_w = d[M][0].interval(K_SIGMA)[0], w[M][0].interval(K_SIGMA)[1]
        ok &= lo_d > hi_w
        parts.append(f"M={M}: {lo_d:.3f} {'>' if lo_d > hi_w else '<='} {hi_w:.3f}")
    record("4d dephased rate above Werner rate (3sigma)", ok, "; ".join(parts))
    assert ok


def test_5_imperfect_operations(noisy_sweep, record):
    res = noisy_sweep
    single_lo = res[1][0].interval(K_SIGMA)[0]
    highs = {M: res[M][0].per_memory_interval(M, K_SIGMA)[1] for M in MEMORIES[1:]}
    per_mem = all(hi < single_lo for hi in highs.values())
    total = _rate_increases(res)
    buf, n = _buffer_non_increasing(res)
    ok = per_mem and total and buf
    record("5 noisy ops: per-memory rate drops, total rises, buffer shrinks", ok,
           f"per-memory upper {dict((m, round(v, 3)) for m, v in highs.items())} < M=1 lower {single_lo:.3f}: {per_mem}; "
           f"total increasing: {total}; N*={n}")
    assert ok


def _modes(samples):
    density = fidelity_density(samples, BINS)
    peak = max(v for _, v in density)
    return find_modes(density, min_separation=6, min_prominence=0.01 * peak)


def test_6_fidelity_density_structure(noisy_sweep, record):
    res = noisy_sweep
    details, ok = [], True
    width = 1.0 / BINS
    for M in MEMORIES[1:]:
        modes = _modes(res[M][1])
        separated = len(modes) >= 2 and abs(modes[0][0] - modes[1][0]) > 5 * width
        ok &= separated
        details.append(f"M={M}: {len(modes)} modes at {[round(c, 4) for c, _ in modes[:3]]}")
    top1 = _modes(res[1][1])[0][0]
    top5 = _modes(res[5][1])[0][0]
    ok &= top5 > top1
    details.append(f"dominant mode M=5 {top5:.4f} vs M=1 {top1:.4f}")
    record("6 multi-modal conditional fidelity density", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------------------
# 7: protocol invariants over random configurations


def _random_config(rng):
    family = (W, D)[int(rng.integers(2))]
    noisy = family is W and rng.random() < 0.5
    return SimConfig(
        family=family,
        gen=GenerationParams(L0=float(rng.choice([1e-300, 5.0, 20.0])), L_att=20.0,
                             eta_h=float(rng.random()), F0=float(rng.uniform(0.5, 1.0)),
                             p_swap=float(rng.random())),
        noise=OperationNoise(float(rng.choice([0.8, 0.95])), float(rng.choice([0.9, 1.0]))) if noisy
        else OperationNoise(),
        quality=quality_factor(float(rng.uniform(0, 20)), 1e-3),
        M=int(rng.integers(1, 7)),
        N_buffer=int(rng.integers(1, 26)),
        trials=100,
        seed=int(rng.integers(0, 2**63)),
    )


def test_7_protocol_invariants(record):
    rng = np.random.default_rng(2024)
    n_cfg, failures = 100, []
    for i in range(n_cfg):
        cfg = _random_config(rng)
        try:
            outcomes = [check_trial(cfg, t) for t in range(cfg.trials)]
            one = run_batch(cfg, threads=1)
            many = run_batch(cfg, threads=4, chunk=9)
            assert all(one.outcome(t) == o for t, o in enumerate(outcomes))
            assert np.array_equal(one.fidelity, many.fidelity)
            assert np.array_equal(one.success, many.success)
            assert np.array_equal(one.purifications, many.purifications)
        except AssertionError as exc:
            failures.append((i, cfg, exc))
    ok = not failures
    record("7 protocol invariants", ok, f"{n_cfg} random configs x 100 trials, {len(failures)} failing")
    assert ok, failures[:1]
