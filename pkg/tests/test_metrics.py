import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import NEAR_ZERO_KM, make_cfg
from qrepeater.metrics import (
    binary_entropy,
    fidelity_density,
    find_modes,
    optimize_buffer,
    rains_bound,
    rate_from_batch,
    rate_from_counts,
)
from qrepeater.protocol import run_batch


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.9) == pytest.approx(0.4689955935892812, abs=1e-15)
    assert binary_entropy(0.9) == pytest.approx(0.468996, abs=1e-6)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_rains_bound():
    assert rains_bound(1.0) == 1.0
    assert rains_bound(0.5) == 0.0
    assert rains_bound(0.9) == pytest.approx(0.531004, abs=1e-6)
    assert rains_bound(0.2) == 0.0
    with pytest.raises(ValueError):
        rains_bound(-0.1)


@given(a=st.floats(0.5, 1.0), b=st.floats(0.5, 1.0))
def test_rains_monotone(a, b):
    lo, hi = sorted((a, b))
    assert rains_bound(lo) <= rains_bound(hi)
    if hi - lo > 1e-9:
        assert rains_bound(lo) < rains_bound(hi)


@given(F=st.floats(0.0, 0.5))
def test_rains_zero_below_half(F):
    assert rains_bound(F) == 0.0


def test_rate_examples():
    r = rate_from_counts(10, 1000, [], 1e-3, 1)
    assert r.rate == 0.0 and r.p_succ == 0.0 and r.mean_fidelity is None
    # p_succ = 0.0488, F = 0.98, N = 10, tau = 1 ms, M = 1
    r = rate_from_counts(10, 10_000, [0.98] * 488, 1e-3, 1)
    assert r.p_succ == pytest.approx(0.0488)
    assert r.rate == pytest.approx(0.0488 * (1 - binary_entropy(0.98)) / 0.01, rel=1e-12)
    assert r.rate == pytest.approx(4.190, abs=5e-4)
    r = rate_from_counts(1, 7, [1.0] * 7, 1e-3, 2)
    assert r.rate == pytest.approx(1000.0) and r.per_memory_rate == pytest.approx(500.0)


def test_rate_stderr_matches_replicate_spread():
    # spread of independent replicate estimates against the delta-method error
    rates, errs = [], []
    for seed in range(30):
        cfg = make_cfg(M=2, eta_h=0.3, N_buffer=8, trials=4000, seed=seed)
        r = rate_from_batch(run_batch(cfg), cfg)
        rates.append(r.rate)
        errs.append(r.rate_stderr)
    assert np.std(rates, ddof=1) == pytest.approx(np.mean(errs), rel=0.35)


def test_rate_identities():
    cfg = make_cfg(M=3, eta_h=0.3, trials=3000, N_buffer=7)
    r = rate_from_batch(run_batch(cfg), cfg)
    assert r.rate == pytest.approx(r.p_succ * r.rains / (7 * 1e-3), rel=1e-15)
    assert r.per_memory_rate == pytest.approx(r.rate / 3, rel=1e-15)
    assert r.successes / r.trials == r.p_succ


def test_optimize_buffer_deterministic_generation():
    cfg = make_cfg(M=1, eta_h=1.0, L0=NEAR_ZERO_KM, p_swap=1.0, trials=200)
    best, sweep = optimize_buffer(cfg, range(1, 8))
    assert best.N_buffer == 1
    assert [r.N_buffer for r in sweep] == list(range(1, 8))


def test_optimize_buffer_best_is_argmax_of_sweep():
    cfg = make_cfg(M=2, eta_h=0.2, trials=2000)
    best, sweep = optimize_buffer(cfg, range(1, 16))
    top = max(r.rate for r in sweep)
    assert best.rate == top
    assert best.N_buffer == min(r.N_buffer for r in sweep if r.rate == top)


def test_optimize_buffer_rejects_empty_range():
    with pytest.raises(ValueError):
        optimize_buffer(make_cfg(), [])


def test_fidelity_density_delta():
    d = fidelity_density([1.0] * 50, bins=100)
    nz = [(c, v) for c, v in d if v > 0]
    assert len(nz) == 1 and nz[0][0] == pytest.approx(0.995) and nz[0][1] == pytest.approx(100.0)


def test_fidelity_density_uniform():
    u = np.random.default_rng(0).uniform(size=200_000)
    d = fidelity_density(u, bins=20)
    assert all(abs(v - 1.0) < 0.05 for _, v in d)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=300), st.integers(1, 300))
def test_fidelity_density_normalised(samples, bins):
    d = fidelity_density(samples, bins)
    assert len(d) == bins
    assert sum(v for _, v in d) / bins == pytest.approx(1.0, abs=1e-9)


def test_fidelity_density_edge_cases():
    assert fidelity_density([], 10) == []
    with pytest.raises(ValueError):
        fidelity_density([0.5], 0)
    with pytest.raises(ValueError):
        fidelity_density([1.2], 10)


def test_find_modes():
    rng = np.random.default_rng(1)
    s = np.concatenate([rng.normal(0.7, 0.01, 3000), rng.normal(0.9, 0.01, 6000)]).clip(0, 1)
    modes = find_modes(fidelity_density(s, 200), min_separation=6, min_prominence=1.0)
    assert len(modes) == 2
    assert modes[0][0] == pytest.approx(0.9, abs=0.01) and modes[1][0] == pytest.approx(0.7, abs=0.01)
    assert find_modes([], 6) == []
