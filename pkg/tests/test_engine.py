from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spstsim.disciplines import ALL_NAMES, DisciplineSpec
from spstsim.engine import Trace, TraceError, run, run_reference, work_conservation_audit
from spstsim.metrics import fcfs_sojourns_closed_form

from conftest import traces

WORKED = Trace([0, 3, 6], [4, 4, 4])
SEVEN = ("fcfs", "lcfs", "sjf", "srpt", "psjf", "ps", "spst")


def test_single_job():
    r = run(Trace([0], [4]), "fcfs")
    assert r.sojourns.tolist() == [4]
    assert r.boundaries == [(0, 4)]


def test_worked_path_fcfs_matches_recursion():
    r = run(WORKED, "fcfs")
    assert r.sojourns.tolist() == fcfs_sojourns_closed_form([3, 3], 4) == [4, 5, 6]
    assert r.boundaries == [(0, 12)]


def test_worked_path_spst():
    r = run(WORKED, "spst")
    # job 3 preempts job 2 at t=6; in departure order the sojourns read 4, 4, 9
    assert r.sojourns.tolist() == [4, 9, 4]
    assert r.departures.tolist() == [4, 12, 10]


def test_worked_path_lcfs():
    assert run(WORKED, "lcfs").sojourns.tolist() == [12, 8, 4]


@pytest.mark.parametrize("name", ALL_NAMES)
def test_worked_path_matches_reference(name):
    a, b = run(WORKED, name), run_reference(WORKED, name)
    assert a.departures.tolist() == b.departures.tolist()
    assert a.boundaries == b.boundaries


def test_departure_before_arrival_splits_period():
    # j=2 with gap 2: the first job leaves exactly when the second arrives
    r = run(Trace([0, 2, 6], [2, 2, 2]), "fcfs")
    assert r.boundaries == [(0, 2), (2, 4), (6, 8)]
    assert r.sojourns.tolist() == [2, 2, 2]


def test_ps_exact_rational_departures():
    r = run(Trace([0, 0, 1], [1, 2, 1]), "ps")
    # two jobs share [0, 1): job0 has 1/2 left; three share from 1
    assert r.departures.tolist() == [Fraction(5, 2), Fraction(4), Fraction(7, 2)]
    assert r.boundaries == [(0, 4)]


def test_ps_fast_kernel_close_to_exact():
    rng = np.random.default_rng(5)
    arr = np.cumsum(rng.integers(0, 5, 400))
    t = Trace(arr, rng.integers(1, 5, 400))
    exact = run(t, "ps")
    fast = run(t, "ps", exact_ps=False)
    assert exact.boundaries == fast.boundaries
    assert np.allclose(exact.departures.astype(float), fast.departures, rtol=0, atol=1e-9)


def test_horizon_censors_jobs():
    r = run(WORKED, "fcfs", horizon=10)
    assert r.completed.tolist() == [True, True, False]
    assert r.censored_count == 1
    assert r.sojourns.tolist() == [4, 5]
    assert r.boundaries == []


def test_horizon_before_last_arrival_rejected():
    with pytest.raises(ValueError):
        run(WORKED, "fcfs", horizon=5)


def test_invalid_traces():
    with pytest.raises(TraceError):
        Trace([3, 1], [1, 1])
    with pytest.raises(TraceError):
        Trace([0, 1], [1, 0])
    with pytest.raises(TraceError):
        Trace([-1], [1])
    with pytest.raises(TraceError):
        run([(0, 1)], "fcfs")


def test_trace_text_round_trip(tmp_path):
    path = tmp_path / "t.txt"
    WORKED.dump(path)
    assert path.read_text() == "0,4\n3,4\n6,4\n"
    assert Trace.load(path) == WORKED
    with pytest.raises(TraceError):
        Trace.from_text("0;4\n")


def test_records_and_counters():
    r = run(WORKED, "spst")
    rec = r.records
    assert rec[1].departure == 12 and rec[1].sojourn == 9
    assert r.completions_by(10) == 2
    assert r.arrivals_by(3) == 2


def test_audit_on_worked_path():
    assert work_conservation_audit([run(WORKED, d) for d in ("fcfs", "spst", "lcfs", "ps")])
    assert work_conservation_audit([run(WORKED, "fcfs")])


def test_audit_rejects_mixed_traces():
    with pytest.raises(ValueError):
        work_conservation_audit([run(WORKED, "fcfs"), run(Trace([0], [4]), "fcfs")])


@settings(max_examples=150, deadline=None)
@given(traces(), st.sampled_from(ALL_NAMES))
def test_event_driven_equals_slot_loop(trace, name):
    a, b = run(trace, name), run_reference(trace, name)
    assert [Fraction(x) for x in a.departures.tolist()] == b.departures.tolist()
    assert a.boundaries == b.boundaries
    assert a.period_first.tolist() == b.period_first.tolist()


@settings(max_examples=100, deadline=None)
@given(traces(max_jobs=12))
def test_work_conservation_across_disciplines(trace):
    assert work_conservation_audit([run(trace, d) for d in SEVEN])


@settings(max_examples=100, deadline=None)
@given(traces(max_jobs=12), st.sampled_from(ALL_NAMES))
def test_result_invariants(trace, name):
    r = run(trace, name)
    w = r.sojourns
    assert np.all(w >= trace.sizes)
    covered = 0
    for (s, e), a, b in zip(r.boundaries, r.period_first, r.period_last):
        dep = r.departures[a:b + 1]
        assert all(s <= d <= e for d in dep)
        assert e - s == trace.sizes[a:b + 1].sum()
        covered += b - a + 1
    assert covered == len(trace)
    # determinism
    again = run(trace, name)
    assert again.departures.tolist() == r.departures.tolist()


@settings(max_examples=100, deadline=None)
@given(traces(max_jobs=12, equal_sizes=True))
def test_equal_size_equivalences(trace):
    fcfs = run(trace, "fcfs").sojourns.tolist()
    assert run(trace, "srpt").sojourns.tolist() == fcfs
    assert run(trace, "psjf").sojourns.tolist() == fcfs
    assert run(trace, "psjf-r").sojourns.tolist() == run(trace, "lcfs").sojourns.tolist()
