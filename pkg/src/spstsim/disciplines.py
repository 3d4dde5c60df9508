"""Service disciplines as pure decision functions over a system snapshot."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Union


class Kind(enum.IntEnum):
    # values are the kernel codes in _kernels.py
    FCFS = 0
    LCFS = 1
    SJF = 2
    SRPT = 3
    PSJF = 4
    SPST = 5
    PS = 6


class TieBreak(enum.Enum):
    EARLIEST_ARRIVAL = "earliest"
    MOST_RECENT = "recent"


@dataclass(frozen=True)
class DisciplineSpec:
    kind: Kind
    tiebreak: TieBreak = TieBreak.EARLIEST_ARRIVAL

    def __post_init__(self):
        # PS ignores the tiebreak; normalise so equal specs compare equal.
        if self.kind is Kind.PS and self.tiebreak is not TieBreak.EARLIEST_ARRIVAL:
            object.__setattr__(self, "tiebreak", TieBreak.EARLIEST_ARRIVAL)

    @property
    def name(self) -> str:
        base = self.kind.name.lower()
        if self.tiebreak is TieBreak.MOST_RECENT:
            return base + "-r"
        return base

    @property
    def label(self) -> str:
        """Display label, e.g. ``SPST-R``."""
        return self.name.upper()

    @property
    def most_recent(self) -> bool:
        return self.tiebreak is TieBreak.MOST_RECENT

    @classmethod
    def parse(cls, text: str) -> "DisciplineSpec":
        """Parse ``fcfs``, ``spst-r`` and friends (case-insensitive)."""
        name = text.strip().lower()
        tiebreak = TieBreak.EARLIEST_ARRIVAL
        if name.endswith("-r"):
            name = name[:-2]
            tiebreak = TieBreak.MOST_RECENT
        try:
            kind = Kind[name.upper()]
        except KeyError:
            raise ValueError(f"unknown discipline {text!r}") from None
        if kind is Kind.PS and tiebreak is TieBreak.MOST_RECENT:
            raise ValueError("ps has no -r variant")
        return cls(kind, tiebreak)

    def __str__(self):
        return self.name


def parse_disciplines(text: str) -> list[DisciplineSpec]:
    return [DisciplineSpec.parse(part) for part in text.split(",") if part.strip()]


ALL_NAMES = ("fcfs", "lcfs", "sjf", "srpt", "psjf", "ps", "spst",
             "fcfs-r", "lcfs-r", "sjf-r", "srpt-r", "psjf-r", "spst-r")

Number = Union[int, Fraction]


@dataclass
class Job:
    id: int
    arrival: int
    size: int
    remaining: Number

    def __post_init__(self):
        if not 0 < self.remaining <= self.size:
            raise ValueError(f"job {self.id}: remaining work {self.remaining} outside (0, {self.size}]")


@dataclass
class SystemState:
    """Active jobs at slot ``now``; ``in_service`` is the job served in the previous slot."""

    now: int
    jobs: Dict[int, Job] = field(default_factory=dict)
    in_service: int | None = None

    def add(self, job: Job):
        if job.arrival > self.now:
            raise ValueError(f"job {job.id} arrives at {job.arrival}, after now={self.now}")
        self.jobs[job.id] = job


@dataclass(frozen=True)
class Single:
    job: int


@dataclass(frozen=True)
class Shared:
    rates: Dict[int, Fraction]


ServiceDecision = Union[Single, Shared]


def predicted_sojourn(state: SystemState, job_id: int) -> Number:
    """Sojourn of ``job_id`` if served from ``state.now`` to completion without preemption."""
    try:
        job = state.jobs[job_id]
    except KeyError:
        raise KeyError(f"job {job_id} is not active") from None
    return state.now + job.remaining - job.arrival


def _primary_key(state: SystemState, job: Job, kind: Kind):
    if kind is Kind.FCFS:
        return job.arrival
    if kind is Kind.LCFS:
        return -job.arrival
    if kind is Kind.SRPT:
        return job.remaining
    if kind in (Kind.PSJF, Kind.SJF):
        return job.size
    if kind is Kind.SPST:
        return state.now + job.remaining - job.arrival
    raise ValueError(f"no priority key for {kind.name}")


def select(state: SystemState, spec: DisciplineSpec) -> ServiceDecision:
    if not state.jobs:
        raise ValueError("cannot select from an empty system")
    if spec.kind is Kind.PS:
        share = Fraction(1, len(state.jobs))
        return Shared({i: share for i in sorted(state.jobs)})
    if spec.kind is Kind.SJF and state.in_service in state.jobs:
        job = state.jobs[state.in_service]
        if job.remaining < job.size:
            # started jobs run to completion
            return Single(job.id)
    sign = -1 if spec.most_recent else 1

    def rank(job):
        return (_primary_key(state, job, spec.kind), sign * job.arrival, job.id)

    best = min(state.jobs.values(), key=rank)
    return Single(best.id)
