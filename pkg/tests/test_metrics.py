import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spstsim.engine import Trace, run
from spstsim.metrics import (BusyPeriod, CycleStats, Exponential, Tabulated, block_decompose,
                             busy_periods, cycles, fcfs_end_condition, fcfs_sojourns_closed_form,
                             long_run_average, period_table, priority_count, renewal_estimate,
                             reward)
from spstsim.workloads import TwoPointModel, two_point_trace

WORKED = Trace([0, 3, 6], [4, 4, 4])
M42 = TwoPointModel(4, 2)


def test_exponential_reward_values():
    assert reward(2, Exponential(1)) == pytest.approx(0.1353, abs=5e-5)
    assert reward(4, Exponential(1)) == pytest.approx(0.0183, abs=5e-5)
    with pytest.raises(ValueError):
        reward(-1, Exponential(1))
    with pytest.raises(ValueError):
        Exponential(0)


def test_tabulated_reward():
    f = Tabulated([1.0])
    assert f(17.5) == 1.0
    g = Tabulated([3, 2, 2, 1])
    assert g(np.array([0, 1.5, 2, 9])).tolist() == [3, 2, 2, 1]
    with pytest.raises(ValueError):
        Tabulated([1, 2])


@given(st.floats(0.01, 10), st.floats(0, 50), st.floats(0, 50))
def test_exponential_non_increasing(kappa, a, b):
    f = Exponential(kappa)
    lo, hi = sorted((a, b))
    assert f(lo) >= f(hi)
    assert 0 < f(lo) <= 1 or f(lo) == 0.0


def test_long_run_average_worked_paths():
    f = Exponential(1)
    spst = run(WORKED, "spst")
    fcfs = run(WORKED, "fcfs")
    assert long_run_average(spst, f) == pytest.approx((2 * math.exp(-4) + math.exp(-9)) / 3)
    assert long_run_average(spst, f) == pytest.approx(0.01225, abs=5e-6)
    assert long_run_average(fcfs, f) == pytest.approx(0.00918, abs=5e-6)
    assert long_run_average(run(Trace([0, 2], [2, 2]), "fcfs"), f) == pytest.approx(0.1353, abs=5e-5)


def test_long_run_average_empty():
    r = run(Trace([0], [4]), "fcfs", horizon=2)
    with pytest.raises(ValueError):
        long_run_average(r, Exponential(1))


def test_busy_periods_worked():
    (bp,) = busy_periods(run(WORKED, "fcfs"))
    assert (bp.n, bp.duration, bp.gaps) == (3, 12, (3, 3))


def test_busy_period_long_first_gap():
    (first, second) = busy_periods(run(Trace([0, 7], [4, 4]), "spst"))
    assert (first.n, first.duration) == (1, 4)


def test_j2_every_period_single():
    t = two_point_trace(TwoPointModel(2, 1), 2000, seed=11)
    for bp in busy_periods(run(t, "lcfs")):
        assert (bp.n, bp.duration) == (1, 2)


def test_block_decompose_examples():
    (bp,) = busy_periods(run(WORKED, "fcfs"))
    d = block_decompose(bp, M42)
    assert d.sizes == (("A", 2),) and (d.n_j1, d.n_j2) == (2, 0)

    t = Trace([0, 3, 6, 9, 12, 19], [4] * 6)
    (bp,) = busy_periods(run(t, "fcfs"))
    assert bp.n == 6 and bp.duration == 24
    d = block_decompose(bp, M42)
    assert d.sizes == (("A", 4), ("B", 1))
    assert (d.n_A, d.n_B) == (1, 1)

    lone = BusyPeriod(0, 4, 0, (4,), ())
    d = block_decompose(lone, M42)
    assert d.blocks == () and (d.n_j1, d.n_j2) == (0, 0)


def test_block_decompose_rejects_foreign_gaps():
    with pytest.raises(ValueError):
        block_decompose(BusyPeriod(0, 8, 0, (4, 4), (2,)), M42)


def test_priority_counts():
    (bp,) = busy_periods(run(WORKED, "spst"))
    assert priority_count(bp, run(WORKED, "spst"), 4) == 2
    assert priority_count(bp, run(WORKED, "fcfs"), 4) == 1
    lone = busy_periods(run(Trace([0], [4]), "spst"))[0]
    assert priority_count(lone, run(Trace([0], [4]), "spst"), 4) == 1
    with pytest.raises(ValueError):
        priority_count(bp, run(WORKED, "ps"), 4)


def test_fcfs_closed_form():
    assert fcfs_sojourns_closed_form([3, 3], 4) == [4, 5, 6]
    assert fcfs_sojourns_closed_form([], 4) == [4]
    assert fcfs_sojourns_closed_form([3, 3, 3, 3, 7], 4) == [4, 5, 6, 7, 8, 5]
    with pytest.raises(ValueError):
        fcfs_sojourns_closed_form([3, 7, 3], 4)


def test_end_condition():
    assert fcfs_end_condition([7], 4) == 1
    assert fcfs_end_condition([3, 3, 7], 4) == 3
    assert fcfs_end_condition([3, 3], 4) == 0


def test_renewal_arithmetic():
    cyc = [CycleStats(0.1, 5, 0.2)] * 3
    assert renewal_estimate(cyc) == pytest.approx(0.1)
    assert renewal_estimate([CycleStats(0.3, 4, 0.5)]) == pytest.approx(0.15)
    with pytest.raises(ValueError):
        renewal_estimate([])
    with pytest.raises(ValueError):
        renewal_estimate([CycleStats(0.1, 5, 0.0)])
    with pytest.raises(ValueError):
        renewal_estimate([CycleStats(0.1, 5, 0.2), CycleStats(0.1, 5, 0.3)])


def test_renewal_j2_equals_point_value():
    # every cycle holds one job with W=2; cycle length is 2 or 4, mean 3
    t = two_point_trace(TwoPointModel(2, 1), 5, seed=0)
    t = Trace([0, 2, 6, 8, 12], [2] * 5)  # gaps 2,4,2,4: mean cycle 3
    cyc = cycles(run(t, "fcfs"), Exponential(1), 1 / 3)
    assert len(cyc) == 4
    assert renewal_estimate(cyc) == pytest.approx(math.exp(-2))
    assert list(cyc)[0] == CycleStats(math.exp(-2), 2, 1 / 3, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 1000), st.sampled_from(["fcfs", "spst", "lcfs"]))
def test_cycle_reward_bounded(j, seed, name):
    model = TwoPointModel.default(j)
    r = run(two_point_trace(model, 300, seed), name)
    f = Exponential(1)
    for c in cycles(r, f, model.rate):
        assert c.reward <= c.n * f(j) + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 10), st.integers(0, 1000))
def test_fcfs_periods_match_closed_form(j, seed):
    model = TwoPointModel.default(j)
    r = run(two_point_trace(model, 300, seed), "fcfs")
    for bp in busy_periods(r):
        w = r.departures[bp.first:bp.first + bp.n] - r.trace.arrivals[bp.first:bp.first + bp.n]
        assert w.tolist() == fcfs_sojourns_closed_form(bp.gaps, j)
        assert bp.duration == bp.n * j
        d = block_decompose(bp, model)
        assert d.n_j1 + d.n_j2 == bp.n - 1


def test_period_table_columns():
    rows = period_table(run(WORKED, "spst"), M42, Exponential(1))
    assert rows == [{"period": 0, "start": 0, "n": 3, "T": 12, "n_A": 1, "n_B": 0, "n_j1": 2,
                     "n_j2": 0, "priority_count": 2,
                     "R": pytest.approx(2 * math.exp(-4) + math.exp(-9))}]
    ps_rows = period_table(run(WORKED, "ps"), M42, Exponential(1))
    assert ps_rows[0]["priority_count"] == ""
