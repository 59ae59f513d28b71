from __future__ import annotations

import time

import pytest

from clopsbench.backend import EventLog, load_backend
from clopsbench.clops import ClopsConfig, run_clops

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def bogota_run():
    """Full-size CLOPS run on the bundled bogota config, virtual clock, seed 0."""
    events = EventLog()
    backend = load_backend("bogota")
    start = time.perf_counter()
    try:
        report = run_clops(backend, ClopsConfig(master_seed=0), events=events)
    finally:
        backend.close()
    return report, events, time.perf_counter() - start
