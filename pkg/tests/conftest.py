import numpy as np
import pytest

from hbd_relay.model import SystemConfig, draw_channels, from_snr_db, realization_rng

# (criterion, passed, detail) lines filled by test_acceptance.py
ACCEPTANCE_REPORT = []


def crandn(rng, *shape):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cfg_ref():
    """K=4, N_U=M_D=2, N_R=64 at 20 dB."""
    return from_snr_db(20.0, K=4, N_U=2, M_D=2, N_R=64)


@pytest.fixture
def small_cfg():
    return SystemConfig(K=2, N_U=2, M_D=2, N_R=16, p=10.0, P_R=10.0)


@pytest.fixture
def channels_ref(cfg_ref):
    return draw_channels(cfg_ref, realization_rng(cfg_ref.seed, 3))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section('acceptance criteria')
    for name, passed, detail in ACCEPTANCE_REPORT:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
