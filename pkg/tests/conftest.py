import pytest

from memstoch.circuit import load_example

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fig1b():
    return load_example("fig1b_candidate")


@pytest.fixture(scope="session")
def fig1b_asym():
    return load_example("fig1b_asymmetric")


@pytest.fixture(scope="session")
def parallel3():
    return load_example("parallel3")


@pytest.fixture(scope="session")
def series3():
    return load_example("series3")


@pytest.fixture(scope="session")
def series2():
    return load_example("series2")


@pytest.fixture(scope="session")
def single():
    return load_example("single")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
