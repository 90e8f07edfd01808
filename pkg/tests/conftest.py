import numpy as np
import pytest

from ibcontrol import builtin_scenario
from ibcontrol.analysis import compare


@pytest.fixture(scope="session")
def uncongested():
    return builtin_scenario("uncongested")


@pytest.fixture(scope="session")
def congested():
    return builtin_scenario("congested")


@pytest.fixture(scope="session")
def uncongested_report(uncongested):
    return compare(uncongested)


@pytest.fixture(scope="session")
def congested_report(congested):
    return compare(congested)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for acceptance criteria: ``acceptance(label, ok, detail)``."""

    def record(label: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"criterion {label:<6} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
