import numpy as np
import pytest


@pytest.fixture
def smooth_signal():
    """t^3 cos 2t on [0, 1]; vanishes to third order at t = 0."""
    from halfline4nls import TimeSignal

    def make(n):
        t = np.linspace(0.0, 1.0, n)
        return TimeSignal(t**3 * np.cos(2 * t), t[1] - t[0])

    return make


ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: report(criterion, name, passed, detail)."""

    def add(criterion, name, passed, detail=""):
        line = f"criterion {criterion:>2} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE.append((criterion, line))
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE, key=lambda item: item[0]):
        terminalreporter.write_line(line)
