import numpy as np
import pytest

from grover_decoherence.calibration import calibrate_cnot
from grover_decoherence.noise import reservoir_presets
from grover_decoherence.plan import preset_plan
from grover_decoherence.system import SystemModel

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def models():
    return {name: SystemModel.preset(name) for name in ("system-I", "system-II")}


@pytest.fixture(scope="session")
def calibrations(models):
    return {name: calibrate_cnot(m) for name, m in models.items()}


@pytest.fixture(scope="session")
def plans(models, calibrations):
    return {name: preset_plan(m, calibrations[name]) for name, m in models.items()}


@pytest.fixture(scope="session")
def reservoirs(models):
    return reservoir_presets(models["system-I"], models["system-II"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_report():
    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
