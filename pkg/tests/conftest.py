import pytest

from etserve.model import JobInstance, TaskSet, TaskSpec, TimingAccuracyModel


def sym(v_max, w, v_min=0):
    return TimingAccuracyModel("symmetric-linear", v_max, v_min, w=w)


def job(task, j=1, release=0, deadline=10, ideal=0, wcet=1):
    return JobInstance(task, j, release, deadline, ideal, wcet)


@pytest.fixture
def w_tasks():
    """Two tasks sharing a 12-tick hyperperiod; their first jobs conflict."""
    return TaskSet([
        TaskSpec(1, wcet=2, period=6, ideal_offset=1, model=sym(10, 4)),
        TaskSpec(2, wcet=2, period=12, ideal_offset=2, model=sym(8, 4)),
    ])


#: One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
