"""Discrete-time single-server simulation core.

At each integer epoch ``t`` the engine finalises departures, admits
arrivals, asks the discipline for a decision and applies one slot of work.
A departure and an arrival at the same epoch therefore close one busy
period and open the next.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .disciplines import (DisciplineSpec, Job, Kind, Shared, Single,
                          SystemState, select)


class TraceError(ValueError):
    pass


class Trace:
    """Jobs in arrival order: integer arrival slots and integer sizes."""

    def __init__(self, arrivals, sizes):
        arrivals = np.ascontiguousarray(arrivals, dtype=np.int64)
        sizes = np.ascontiguousarray(sizes, dtype=np.int64)
        if arrivals.ndim != 1 or arrivals.shape != sizes.shape:
            raise TraceError("arrivals and sizes must be 1-d and the same length")
        if arrivals.size:
            if arrivals[0] < 0:
                raise TraceError("arrival times must be nonnegative")
            if np.any(np.diff(arrivals) < 0):
                raise TraceError("arrival times must be non-decreasing")
            if sizes.min() < 1:
                raise TraceError("job sizes must be positive integers")
        arrivals.setflags(write=False)
        sizes.setflags(write=False)
        self.arrivals = arrivals
        self.sizes = sizes

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Trace":
        pairs = list(pairs)
        if not pairs:
            return cls([], [])
        arrivals, sizes = zip(*pairs)
        return cls(arrivals, sizes)

    def __len__(self):
        return int(self.arrivals.size)

    def __iter__(self):
        return zip(self.arrivals.tolist(), self.sizes.tolist())

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (np.array_equal(self.arrivals, other.arrivals)
                and np.array_equal(self.sizes, other.sizes))

    def __repr__(self):
        head = list(self)[:4]
        more = ", ..." if len(self) > 4 else ""
        return f"Trace({head}{more}, n={len(self)})"

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.arrivals)

    def to_text(self) -> str:
        return "".join(f"{a},{s}\n" for a, s in self)

    @classmethod
    def from_text(cls, text: str) -> "Trace":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                a, s = line.split(",")
                pairs.append((int(a), int(s)))
            except ValueError:
                raise TraceError(f"line {lineno}: expected 'arrival_time,size', got {line!r}") from None
        return cls.from_pairs(pairs)

    def dump(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Trace":
        return cls.from_text(Path(path).read_text())


class JobRecord(NamedTuple):
    arrival: int
    size: int
    departure: object
    sojourn: object


@dataclass(frozen=True, eq=False)
class SimResult:
    """Outcome of one (trace, discipline) run.

    ``departures`` is int64 for single-job disciplines (-1 = censored), an
    object array of :class:`~fractions.Fraction` for exact PS and float64
    for the fast PS kernel (NaN = censored). Busy periods are the closed
    intervals ``[period_start[k], period_end[k]]`` holding jobs
    ``period_first[k] .. period_last[k]``.
    """

    trace: Trace
    discipline: DisciplineSpec
    departures: np.ndarray
    period_start: np.ndarray
    period_end: np.ndarray
    period_first: np.ndarray
    period_last: np.ndarray
    horizon: int | None = None
    _done: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dep = self.departures
        if dep.dtype == object:
            done = np.array([d is not None for d in dep], dtype=bool)
        elif dep.dtype.kind == "f":
            done = ~np.isnan(dep)
        else:
            done = dep >= 0
        object.__setattr__(self, "_done", done)

    @property
    def completed(self) -> np.ndarray:
        return self._done

    @property
    def censored_count(self) -> int:
        return int((~self._done).sum())

    @property
    def sojourns(self) -> np.ndarray:
        """Sojourn times of completed jobs, in job order."""
        done = self._done
        dep = self.departures[done]
        arr = self.trace.arrivals[done]
        if dep.dtype == object:
            return np.array([d - int(a) for d, a in zip(dep, arr)], dtype=object)
        return dep - arr

    @property
    def records(self) -> list[JobRecord]:
        out = []
        for i, (a, s) in enumerate(self.trace):
            d = self.departures[i] if self._done[i] else None
            d = d.item() if isinstance(d, np.generic) else d
            out.append(JobRecord(a, s, d, None if d is None else d - a))
        return out

    @property
    def boundaries(self) -> list[tuple[int, int]]:
        return list(zip(self.period_start.tolist(), self.period_end.tolist()))

    def completions_by(self, t) -> int:
        """Number of jobs that have departed by time ``t``."""
        dep = self.departures[self._done]
        return int(sum(1 for d in dep if d <= t)) if dep.dtype == object else int((dep <= t).sum())

    def arrivals_by(self, t) -> int:
        return int(np.searchsorted(self.trace.arrivals, t, side="right"))


def _check_horizon(trace: Trace, horizon):
    if horizon is None:
        return
    if len(trace) and horizon < trace.arrivals[-1]:
        raise ValueError(f"horizon {horizon} precedes the last arrival {trace.arrivals[-1]}")


def run(trace: Trace, discipline: DisciplineSpec | str, horizon: int | None = None,
        exact_ps: bool = True) -> SimResult:
    """Simulate ``trace`` under ``discipline``.

    PS runs in exact rational arithmetic unless ``exact_ps`` is False, in
    which case the float kernel is used (bulk experiments only).
    """
    if not isinstance(trace, Trace):
        raise TraceError(f"expected a Trace, got {type(trace).__name__}")
    if isinstance(discipline, str):
        discipline = DisciplineSpec.parse(discipline)
    _check_horizon(trace, horizon)
    limit = np.iinfo(np.int64).max if horizon is None else int(horizon)
    if discipline.kind is Kind.PS:
        if exact_ps:
            out = _run_ps_exact(trace, limit)
        else:
            out = _kernels.run_ps(trace.arrivals, trace.sizes, limit)
    else:
        out = _kernels.run_single(trace.arrivals, trace.sizes, int(discipline.kind),
                                  discipline.most_recent, limit)
    return SimResult(trace, discipline, *out, horizon=horizon)


def _run_ps_exact(trace: Trace, horizon):
    # same virtual-time scheme as the float kernel, in Fractions
    n = len(trace)
    arrivals = trace.arrivals.tolist()
    sizes = trace.sizes.tolist()
    dep = np.full(n, None, dtype=object)
    periods = []
    active: dict[int, Fraction] = {}
    nxt = 0
    t = Fraction(arrivals[0]) if n else Fraction(0)
    v = Fraction(0)
    start = first = 0
    while True:
        if not active:
            if nxt == n:
                break
            t = max(t, Fraction(arrivals[nxt]))
            if t >= horizon:
                break
            start, first, v = int(t), nxt, Fraction(0)
        while nxt < n and arrivals[nxt] <= t:
            active[nxt] = v + sizes[nxt]
            nxt += 1
        fmin = min(active.values())
        done = t + (fmin - v) * len(active)
        na = arrivals[nxt] if nxt < n else None
        if na is None or done <= na:
            if done > horizon:
                break
            t, v = done, fmin
            for i in [i for i, tag in active.items() if tag == fmin]:
                del active[i]
                dep[i] = t
            if not active:
                if t.denominator != 1:
                    raise AssertionError(f"busy period ended at non-integer time {t}")
                periods.append((start, int(t), first, nxt - 1))
        else:
            v += (na - t) / len(active)
            t = Fraction(na)
    cols = np.array(periods, dtype=np.int64).reshape(-1, 4).T
    return (dep, *cols)


def run_reference(trace: Trace, discipline: DisciplineSpec | str,
                  horizon: int | None = None) -> SimResult:
    """Literal slot-by-slot simulation through :func:`disciplines.select`.

    Slow; it exists as an independent check on :func:`run`.
    """
    if isinstance(discipline, str):
        discipline = DisciplineSpec.parse(discipline)
    _check_horizon(trace, horizon)
    n = len(trace)
    arrivals = trace.arrivals.tolist()
    sizes = trace.sizes.tolist()
    dep = np.full(n, None, dtype=object)
    periods = []
    state = SystemState(now=arrivals[0] if n else 0)
    nxt = 0
    start = first = None
    pending: list[tuple[int, object]] = []
    while True:
        t = state.now
        # (1) departures completing at t (or inside the previous slot, for PS)
        for i, when in pending:
            dep[i] = when
            del state.jobs[i]
        pending = []
        if start is not None and not state.jobs:
            periods.append((start, t, first, nxt - 1))
            start = None
        if horizon is not None and t >= horizon:
            break
        # (2) arrivals
        while nxt < n and arrivals[nxt] == t:
            if start is None:
                start, first = t, nxt
            state.add(Job(nxt, arrivals[nxt], sizes[nxt], sizes[nxt]))
            nxt += 1
        if not state.jobs:
            if nxt == n:
                break
            state.now = arrivals[nxt]
            state.in_service = None
            continue
        # (3) decision
        decision = select(state, discipline)
        # (4) one slot of work
        if isinstance(decision, Single):
            job = state.jobs[decision.job]
            job.remaining -= 1
            state.in_service = job.id
            if job.remaining == 0:
                pending.append((job.id, t + 1))
        else:
            if discipline.kind is not Kind.PS:
                raise ValueError(f"{discipline.name} returned a shared decision")
            pending = _fluid_slot(state, t)
            state.in_service = None
        state.now = t + 1
    return SimResult(trace, discipline, dep, *np.array(periods, dtype=np.int64).reshape(-1, 4).T,
                     horizon=horizon)


def _fluid_slot(state: SystemState, t: int):
    """Serve [t, t+1) with equal sharing; return (job, completion instant) pairs."""
    clock = Fraction(t)
    end = Fraction(t + 1)
    finished = []
    live = [j for j in state.jobs.values()]
    while live and clock < end:
        m = len(live)
        low = min(j.remaining for j in live)
        step = min(low * m, end - clock)
        for j in live:
            j.remaining -= step / m
        clock += step
        for j in [j for j in live if j.remaining == 0]:
            finished.append((j.id, clock))
            live.remove(j)
    return finished


def work_conservation_audit(results: Sequence[SimResult]) -> bool:
    """True iff every result has the same busy/idle boundary sequence."""
    if not results:
        raise ValueError("no results to audit")
    base = results[0]
    for r in results[1:]:
        if r.trace != base.trace:
            raise ValueError("results come from different traces")
    for r in results:
        if r.censored_count:
            raise ValueError(f"{r.discipline.name} run has censored jobs")
    ref = base.boundaries
    return all(r.boundaries == ref for r in results[1:])
