import pytest
import reference_circuits as rc

from fluxstoq import solve_spectrum

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one pass/fail line per criterion check and echo it immediately."""

    def record(criterion, name, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def table1_spectrum():
    return solve_spectrum(rc.single_qubit(), n_states=12)


@pytest.fixture(scope="session")
def figure3_spectrum():
    return solve_spectrum(rc.figure3(), n_states=40)


@pytest.fixture(scope="session")
def figure4_spectrum():
    return solve_spectrum(rc.figure4(), n_states=40)
