"""Rewards, long-run averages, busy-period analytics and renewal estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .disciplines import Kind
from .engine import SimResult
from .workloads import TwoPointModel


class RewardFn:
    """Non-increasing map from sojourn time to reward."""

    name = "reward"

    def _eval(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, w):
        arr = np.asarray(w, dtype=float)
        if np.any(arr < 0):
            raise ValueError("sojourn times must be nonnegative")
        out = self._eval(arr)
        return float(out) if out.ndim == 0 else out


class Exponential(RewardFn):
    def __init__(self, kappa: float):
        if not kappa > 0:
            raise ValueError(f"kappa must be positive, got {kappa}")
        self.kappa = float(kappa)
        self.name = f"exp(-{self.kappa:g}W)"

    def _eval(self, w):
        return np.exp(-self.kappa * w)

    def __repr__(self):
        return f"Exponential(kappa={self.kappa!r})"


class Tabulated(RewardFn):
    """Step reward: ``values[floor(W)]``, held at ``values[-1]`` past the table."""

    def __init__(self, values: Sequence[float]):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("tabulated reward needs a nonempty 1-d table")
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated reward values must be finite")
        if np.any(np.diff(values) > 0):
            raise ValueError("tabulated reward must be non-increasing")
        self.values = values
        self.name = f"table[{values.size}]"

    def _eval(self, w):
        idx = np.minimum(np.floor(w).astype(np.int64), self.values.size - 1)
        return self.values[idx]

    def __repr__(self):
        return f"Tabulated({self.values.tolist()!r})"


def reward(w, f: RewardFn):
    return f(w)


def job_rewards(result: SimResult, f: RewardFn) -> np.ndarray:
    return f(np.asarray(result.sojourns, dtype=float))


def long_run_average(result: SimResult, f: RewardFn) -> float:
    """Mean reward over completed jobs; censored jobs are ignored."""
    w = result.sojourns
    if w.size == 0:
        raise ValueError("no completed jobs")
    return float(np.mean(f(np.asarray(w, dtype=float))))


@dataclass(frozen=True)
class BusyPeriod:
    start: int
    end: int
    first: int  # index of the leading job in the trace
    sizes: tuple[int, ...]
    gaps: tuple[int, ...]  # interarrivals between the period's jobs

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def jobs(self) -> range:
        return range(self.first, self.first + self.n)


def busy_periods(result: SimResult) -> list[BusyPeriod]:
    arr = result.trace.arrivals
    sizes = result.trace.sizes
    out = []
    for s, e, a, b in zip(result.period_start.tolist(), result.period_end.tolist(),
                          result.period_first.tolist(), result.period_last.tolist()):
        out.append(BusyPeriod(s, e, a, tuple(sizes[a:b + 1].tolist()),
                              tuple(np.diff(arr[a:b + 1]).tolist())))
    return out


@dataclass(frozen=True)
class BlockDecomposition:
    """Maximal runs of non-leading jobs sharing the same preceding gap.

    ``blocks`` holds ``(kind, members)`` with members as 0-based positions
    inside the busy period (the leading job is position 0 and in no block).
    """

    blocks: tuple[tuple[str, tuple[int, ...]], ...]

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.blocks)

    @property
    def sizes(self) -> tuple[tuple[str, int], ...]:
        return tuple((k, len(m)) for k, m in self.blocks)

    @property
    def n_A(self) -> int:
        return self.kinds.count("A")

    @property
    def n_B(self) -> int:
        return self.kinds.count("B")

    @property
    def n_j1(self) -> int:
        return sum(len(m) for k, m in self.blocks if k == "A")

    @property
    def n_j2(self) -> int:
        return sum(len(m) for k, m in self.blocks if k == "B")


def block_decompose(bp: BusyPeriod, model: TwoPointModel) -> BlockDecomposition:
    if any(s != model.j for s in bp.sizes):
        raise ValueError(f"busy period has sizes other than j={model.j}")
    blocks: list[tuple[str, list[int]]] = []
    for pos, gap in enumerate(bp.gaps, start=1):
        if gap == model.j1:
            kind = "A"
        elif gap == model.j2:
            kind = "B"
        else:
            raise ValueError(f"gap {gap} is neither {model.j1} nor {model.j2}")
        if blocks and blocks[-1][0] == kind:
            blocks[-1][1].append(pos)
        else:
            blocks.append((kind, [pos]))
    return BlockDecomposition(tuple((k, tuple(m)) for k, m in blocks))


def period_sojourns(bp: BusyPeriod, result: SimResult) -> np.ndarray:
    jobs = np.arange(bp.first, bp.first + bp.n)
    return result.departures[jobs] - result.trace.arrivals[jobs]


def priority_count(bp: BusyPeriod, result: SimResult, j: int) -> int:
    """Jobs of ``bp`` whose sojourn equals the job size ``j``."""
    if result.discipline.kind is Kind.PS:
        raise ValueError("priority analytics are not defined for PS")
    return int(np.count_nonzero(period_sojourns(bp, result) == j))


def fcfs_sojourns_closed_form(gaps: Sequence[int], j: int) -> list[int]:
    """FCFS sojourns inside one busy period of size-``j`` jobs."""
    w = [j]
    for k, y in enumerate(gaps, start=2):
        nxt = w[-1] - y + j
        if nxt <= j:
            raise ValueError(f"job {k} would not wait (W={nxt}); gaps span more than one busy period")
        w.append(nxt)
    return w


def fcfs_end_condition(gaps: Sequence[int], j: int) -> int:
    """Length of the busy period started by a size-``j`` job.

    The period holding ``m`` jobs has ended once their total work ``m*j``
    fits in the first ``m`` gaps. Returns 0 when ``gaps`` is too short to
    decide.
    """
    total = 0
    for m, y in enumerate(gaps, start=1):
        total += y
        if m * j <= total:
            return m
    return 0


@dataclass(frozen=True)
class CycleStats:
    reward: float  # summed over the cycle's jobs
    duration: int  # busy period plus the idle period after it
    rate: float
    n: int = 0


class CycleTable(Sequence):
    """Array-backed sequence of :class:`CycleStats` for long runs."""

    def __init__(self, rewards, durations, counts, rate: float):
        self.rewards = np.asarray(rewards, dtype=float)
        self.durations = np.asarray(durations, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.rate = float(rate)

    def __len__(self):
        return int(self.rewards.size)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return CycleTable(self.rewards[k], self.durations[k], self.counts[k], self.rate)
        return CycleStats(float(self.rewards[k]), int(self.durations[k]), self.rate,
                          int(self.counts[k]))


def cycles(result: SimResult, f: RewardFn, rate: float) -> CycleTable:
    """Renewal cycles of ``result``; the last (open) cycle is dropped."""
    if result.censored_count:
        raise ValueError("cycles need a run without censored jobs")
    if result.period_start.size < 2:
        return CycleTable([], [], [], rate)
    r = job_rewards(result, f)
    sums = np.add.reduceat(r, result.period_first)[:-1]
    durations = np.diff(result.period_start)
    counts = (result.period_last - result.period_first + 1)[:-1]
    return CycleTable(sums, durations, counts, rate)


def renewal_estimate(cycle_list: Sequence[CycleStats]) -> float:
    """Mean cycle reward over (arrival rate x mean cycle length)."""
    if not len(cycle_list):
        raise ValueError("need at least one complete cycle")
    if isinstance(cycle_list, CycleTable):
        rate = cycle_list.rate
        rewards = cycle_list.rewards
        durations = cycle_list.durations
    else:
        rate = cycle_list[0].rate
        if any(c.rate != rate for c in cycle_list):
            raise ValueError("cycles disagree on the arrival rate")
        rewards = np.array([c.reward for c in cycle_list], dtype=float)
        durations = np.array([c.duration for c in cycle_list], dtype=float)
    if not rate > 0:
        raise ValueError(f"arrival rate must be positive, got {rate}")
    return float(rewards.mean() / (rate * durations.mean()))


def period_table(result: SimResult, model: TwoPointModel | None, f: RewardFn) -> list[dict]:
    """One row per busy period: n, T, block counts, priority count, R."""
    rows = []
    is_ps = result.discipline.kind is Kind.PS
    rewards = np.zeros(len(result.trace))
    rewards[result.completed] = job_rewards(result, f)
    for idx, bp in enumerate(busy_periods(result)):
        row = {"period": idx, "start": bp.start, "n": bp.n, "T": bp.duration}
        if model is not None:
            dec = block_decompose(bp, model)
            row.update(n_A=dec.n_A, n_B=dec.n_B, n_j1=dec.n_j1, n_j2=dec.n_j2)
        else:
            row.update(n_A="", n_B="", n_j1="", n_j2="")
        equal = len(set(bp.sizes)) == 1
        row["priority_count"] = "" if is_ps or not equal else priority_count(bp, result, bp.sizes[0])
        row["R"] = math.fsum(rewards[bp.first:bp.first + bp.n])
        rows.append(row)
    return rows
