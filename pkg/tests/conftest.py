import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def seed():
    return 20240611


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


@pytest.fixture
def record_criterion():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""

    def record(label: str, ok: bool, detail: str):
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok

    return record


@pytest.fixture(autouse=True)
def _quiet_solver_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="fvflow")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
