import numpy as np
import pytest

from fracpso.gl_core import Signal, TimeGrid

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance criterion outcome; printed in the terminal summary."""

    def _record(name: str, passed: bool, detail: str = ""):
        _CRITERIA.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def grid(dt=0.05, t_end=10.0):
    return TimeGrid.from_horizon(dt, t_end)


def step_signal(g):
    return Signal(g, np.ones(g.n_samples))


def ramp_signal(g):
    return Signal(g, g.t)
