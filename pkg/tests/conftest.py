import pytest

from qrepeater.ops import GenerationParams, OperationNoise
from qrepeater.protocol import SimConfig
from qrepeater.states import StateFamily, quality_factor

# L0 this small makes exp(-L0/L_att) round to 1
NEAR_ZERO_KM = 1e-300


@pytest.fixture
def default_quality():
    return quality_factor(1.0, 1e-3)


def make_cfg(family="werner", M=1, N_buffer=10, trials=1000, seed=0, eta_h=0.1, p_swap=0.5,
             p_gate=1.0, eta_meas=1.0, F0=1.0, kappa=1.0, L0=20.0):
    return SimConfig(
        family=StateFamily(family),
        gen=GenerationParams(L0=L0, L_att=20.0, eta_h=eta_h, F0=F0, p_swap=p_swap),
        noise=OperationNoise(p_gate, eta_meas),
        quality=quality_factor(kappa, 1e-3),
        M=M,
        N_buffer=N_buffer,
        trials=trials,
        seed=seed,
    )


ACCEPTANCE_RESULTS = []


@pytest.fixture
def record():
    """Log one acceptance criterion outcome for the end-of-run summary."""

    def _record(criterion, ok, detail=""):
        ACCEPTANCE_RESULTS.append((criterion, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
