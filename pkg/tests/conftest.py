import numpy as np
import pytest

from vhsip_landing.config import RunConfig

# acceptance tests register (number, name, passed, detail) here so a summary
# with one line per criterion appears at the end of the run
ACCEPTANCE_RESULTS = []


@pytest.fixture
def cfg():
    return RunConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num:2d} {name}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
