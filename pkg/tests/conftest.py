import numpy as np
import pytest

from llrcorr.llr import ChannelParams

# per-criterion outcomes recorded by test_acceptance, printed after the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def reference_channel() -> ChannelParams:
    """h = 1, g = 0.5, sigma2_z = 0.25 (SNR 3 dB, SIR 6 dB)."""
    return ChannelParams(1.0, 0.5, 0.25)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
