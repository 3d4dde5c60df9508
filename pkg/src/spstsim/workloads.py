"""Trace generators: single batch, two-point interarrivals, Bernoulli slots."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .engine import Trace

#: recorded in CSV metadata so runs can be replayed
RNG_NAME = "numpy.PCG64"

Seed = Union[int, np.random.SeedSequence, None]


def make_rng(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class TwoPointModel:
    """Equal sizes ``j``; gaps ``j + 1 - delta`` or ``j + 1 + delta`` with probability 1/2."""

    j: int
    delta: int
    analysis_mode: bool = False

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"job size must be a positive integer, got {self.j}")
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta}")
        if self.delta > self.j:
            raise ValueError(f"delta={self.delta} > j={self.j} makes the short gap nonpositive")
        if self.analysis_mode and 2 * self.delta > self.j:
            raise ValueError(f"analysis requires delta <= j/2 (j={self.j}, delta={self.delta})")

    @classmethod
    def default(cls, j: int, analysis_mode: bool = False) -> "TwoPointModel":
        """The sweep default ``delta = floor(j/2)``."""
        return cls(j, max(j // 2, 1), analysis_mode)

    @property
    def j1(self) -> int:
        return self.j + 1 - self.delta

    @property
    def j2(self) -> int:
        return self.j + 1 + self.delta

    @property
    def rate(self) -> float:
        return 1.0 / (self.j + 1)

    @property
    def mean_gap(self) -> float:
        return (self.j1 + self.j2) / 2


@dataclass(frozen=True)
class BernoulliModel:
    """One size-``j`` arrival per slot with probability ``p`` (default ``1/(j+1)``)."""

    j: int
    p: float | None = None

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"job size must be a positive integer, got {self.j}")
        if self.p is None:
            object.__setattr__(self, "p", 1.0 / (self.j + 1))
        if not 0 < self.p < 1:
            raise ValueError(f"arrival probability must lie in (0, 1), got {self.p}")
        if 1.0 / self.p <= self.j:
            raise ValueError(f"unstable: mean gap {1 / self.p:g} <= job size {self.j}")

    @property
    def rate(self) -> float:
        return self.p

    @property
    def mean_gap(self) -> float:
        return 1.0 / self.p


def two_point_trace(model: TwoPointModel, n_jobs: int, seed: Seed = None) -> Trace:
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    rng = make_rng(seed)
    coin = rng.integers(0, 2, size=n_jobs - 1)
    gaps = np.where(coin == 0, model.j1, model.j2)
    arrivals = np.zeros(n_jobs, dtype=np.int64)
    np.cumsum(gaps, out=arrivals[1:])
    return Trace(arrivals, np.full(n_jobs, model.j, dtype=np.int64))


def bernoulli_trace(model: BernoulliModel, horizon_slots: int, seed: Seed = None) -> Trace:
    if horizon_slots < 1:
        raise ValueError("horizon_slots must be >= 1")
    rng = make_rng(seed)
    arrivals = np.flatnonzero(rng.random(horizon_slots) < model.p)
    return Trace(arrivals, np.full(arrivals.size, model.j, dtype=np.int64))


def batch_trace(sizes: Sequence[int]) -> Trace:
    if len(sizes) == 0:
        raise ValueError("a batch needs at least one job")
    return Trace(np.zeros(len(sizes), dtype=np.int64), sizes)
