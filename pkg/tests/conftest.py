import numpy as np
import pytest

from thermocovert.sensor import DtsConfig
from thermocovert.thermal_model import ChipTopology, PowerModel


@pytest.fixture
def topo():
    return ChipTopology()


@pytest.fixture
def model():
    return PowerModel()


@pytest.fixture
def quiet():
    """Sensor with the noise switched off."""
    return DtsConfig(noise_sigma=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict(request):
    """Record one summary line for an acceptance criterion.

    Call as ``verdict(n, ok, detail)``; the line is printed in the terminal
    summary whether or not the test's own assertions pass.
    """
    def record(n: int, ok: bool, detail: str):
        _ACCEPTANCE[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[n])
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
