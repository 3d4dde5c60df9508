import pytest
from hypothesis import strategies as st

from spstsim.engine import Trace

_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") and report.when == "call":
        _acceptance.append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


@st.composite
def traces(draw, max_jobs=10, max_gap=6, max_size=6, equal_sizes=False):
    n = draw(st.integers(1, max_jobs))
    gaps = draw(st.lists(st.integers(0, max_gap), min_size=n - 1, max_size=n - 1))
    start = draw(st.integers(0, 3))
    if equal_sizes:
        sizes = [draw(st.integers(1, max_size))] * n
    else:
        sizes = draw(st.lists(st.integers(1, max_size), min_size=n, max_size=n))
    arrivals = [start]
    for g in gaps:
        arrivals.append(arrivals[-1] + g)
    return Trace(arrivals, sizes)
