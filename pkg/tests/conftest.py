import time

import numpy as np
import pytest

from maserbloch import discretize, paper_params, preset, run


@pytest.fixture(scope="session")
def params():
    return paper_params()


@pytest.fixture(scope="session")
def grid(params):
    return discretize(params)


@pytest.fixture(scope="session")
def small_params():
    return paper_params(N_rho=21)


@pytest.fixture(scope="session")
def sr_series():
    return run(preset("sr_decay"))


@pytest.fixture(scope="session")
def revivals_series():
    # shared by the revival and linewidth checks; takes ~20 s
    started = time.perf_counter()
    series = run(preset("revivals_long"))
    series.metadata["wall_time_s"] = time.perf_counter() - started
    return series


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record and assert one acceptance criterion, including its runtime budget."""

    def record(number, title, ok, detail, elapsed, limit):
        within = elapsed < limit
        passed = bool(ok and within)
        line = (f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail} | "
                f"{elapsed:.1f}s (limit {limit:g}s)")
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
