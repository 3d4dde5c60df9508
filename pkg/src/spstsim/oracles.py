"""Exhaustive desk-scale checks of the batch and SPST-vs-FCFS results.

Everything here simulates through :func:`spstsim.engine.run`, so a bug in
the engine shows up as a violation rather than hiding in a second
implementation.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .disciplines import DisciplineSpec, Kind
from .engine import Trace, run
from .metrics import (BusyPeriod, Exponential, RewardFn, Tabulated, block_decompose,
                      busy_periods, fcfs_end_condition, fcfs_sojourns_closed_form,
                      period_sojourns)
from .workloads import TwoPointModel, batch_trace, make_rng

PERMUTATION_CAP = 8
MAX_GAPS_CAP = 14
LN2 = math.log(2)
# slack for comparing two reward sums built from different sojourn multisets
REL_TOL = 1e-12

FCFS = DisciplineSpec(Kind.FCFS)
SPST = DisciplineSpec(Kind.SPST)
SJF = DisciplineSpec(Kind.SJF)


@dataclass
class Violation:
    check: str
    case: str
    expected: str
    observed: str


@dataclass
class VerificationReport:
    name: str
    cases_checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    # per-check [cases, violations]
    checks: dict[str, list[int]] = field(default_factory=OrderedDict)
    truncated: int = 0
    notes: dict[str, object] = field(default_factory=OrderedDict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, check: str, ok: bool, case: str = "", expected="", observed=""):
        counts = self.checks.setdefault(check, [0, 0])
        counts[0] += 1
        if not ok:
            counts[1] += 1
            self.violations.append(Violation(check, case, str(expected), str(observed)))

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        self.cases_checked += other.cases_checked
        self.violations.extend(other.violations)
        for k, (c, v) in other.checks.items():
            counts = self.checks.setdefault(k, [0, 0])
            counts[0] += c
            counts[1] += v
        self.truncated += other.truncated
        self.notes.update(other.notes)
        return self

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} ({self.cases_checked} cases, {len(self.violations)} violations)"


def _total(rewards: np.ndarray) -> np.ndarray:
    # summing in sorted order makes equal multisets give bit-identical totals
    return np.sort(rewards, axis=-1).sum(axis=-1)


# -- batch arrivals -----------------------------------------------------------

def best_batch_order(sizes: Sequence[int], f: RewardFn, cap: int = PERMUTATION_CAP):
    """Maximum total reward over all service orders and every order attaining it.

    Orders are tuples of job indices into ``sizes``.
    """
    n = len(sizes)
    if not 1 <= n <= cap:
        raise ValueError(f"batch size {n} outside [1, {cap}]")
    sizes = np.asarray(sizes, dtype=np.int64)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = _total(f(np.cumsum(sizes[perms], axis=1)))
    best = float(totals.max())
    orders = {tuple(p) for p in perms[totals == best].tolist()}
    return best, orders


def order_reward(sizes: Sequence[int], order: Sequence[int], f: RewardFn) -> float:
    sizes = np.asarray(sizes, dtype=np.int64)
    return float(_total(f(np.cumsum(sizes[list(order)]))))


def default_batch_rewards() -> list[RewardFn]:
    # a jagged non-exponential table: strictly decreasing with uneven steps
    steps = make_rng(20240517).random(120) + np.where(np.arange(120) % 7 == 0, 5.0, 0.0)
    table = 1000.0 - np.cumsum(steps)
    return [Exponential(0.25), Exponential(1.0), Exponential(4.0), Tabulated(table)]


def verify_batch_theorem(n_max: int = 7, size_range: tuple[int, int] = (1, 10),
                         rewards: Sequence[RewardFn] | None = None,
                         instance_count: int = 200, seed: int = 0) -> VerificationReport:
    if not 1 <= n_max <= PERMUTATION_CAP:
        raise ValueError(f"n_max={n_max} outside [1, {PERMUTATION_CAP}]")
    lo, hi = size_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad size range {size_range}")
    rewards = list(rewards) if rewards is not None else default_batch_rewards()
    rng = make_rng(seed)
    report = VerificationReport("batch")
    for inst in range(instance_count):
        n = int(rng.integers(1, n_max + 1))
        sizes = rng.integers(lo, hi + 1, size=n).tolist()
        result = run(batch_trace(sizes), SJF)
        sjf_order = np.argsort(result.departures, kind="stable").tolist()
        for f in rewards:
            case = f"instance={inst} sizes={sizes} f={f.name}"
            best, orders = best_batch_order(sizes, f)
            got = float(_total(f(result.sojourns.astype(float))))
            report.record("sjf_optimal", abs(got - best) <= REL_TOL * abs(best), case, best, got)
            report.record("sjf_among_maximisers", tuple(sjf_order) in orders, case,
                          "in argmax", sjf_order)
            for k in range(n - 1):
                swapped = list(sjf_order)
                swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
                r1 = order_reward(sizes, sjf_order, f)
                r2 = order_reward(sizes, swapped, f)
                report.record("adjacent_swap", r1 >= r2, f"{case} swap={k}", f">= {r2}", r1)
            report.cases_checked += 1
    return report


# -- two-point busy periods ---------------------------------------------------

@dataclass(frozen=True)
class EnumeratedPeriod:
    gaps: tuple[int, ...]  # internal interarrivals, n - 1 of them
    trace: Trace
    period: BusyPeriod


@dataclass
class Enumeration:
    model: TwoPointModel
    max_gaps: int
    periods: list[EnumeratedPeriod]
    sequences: int
    truncated: int  # sequences whose first period outlived the gap budget
    rule_mismatches: int  # engine period length disagreed with the end rule

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], BusyPeriod]]:
        return ((p.gaps, p.period) for p in self.periods)

    def __len__(self):
        return len(self.periods)


def _check_enum_params(j: int, delta: int, max_gaps: int) -> TwoPointModel:
    if not 1 <= max_gaps <= MAX_GAPS_CAP:
        raise ValueError(f"max_gaps={max_gaps} outside [1, {MAX_GAPS_CAP}]")
    return TwoPointModel(j, delta, analysis_mode=True)


def period_trace(gaps: Sequence[int], j: int) -> Trace:
    arrivals = np.zeros(len(gaps) + 1, dtype=np.int64)
    np.cumsum(gaps, out=arrivals[1:])
    return Trace(arrivals, np.full(arrivals.size, j, dtype=np.int64))


def enumerate_busy_periods(j: int, delta: int, max_gaps: int = 12) -> Enumeration:
    """First busy period of every gap sequence in ``{j1, j2}**max_gaps``."""
    model = _check_enum_params(j, delta, max_gaps)
    seen: dict[tuple[int, ...], EnumeratedPeriod] = {}
    truncated = mismatches = 0
    count = 0
    for seq in itertools.product((model.j1, model.j2), repeat=max_gaps):
        count += 1
        trace = period_trace(seq, j)
        result = run(trace, FCFS)
        n = int(result.period_last[0]) + 1
        rule = fcfs_end_condition(seq, j)
        if n == len(trace):
            # no later arrival seen, so the period may not be over
            truncated += 1
            mismatches += rule != 0
            continue
        mismatches += rule != n
        key = tuple(seq[:n - 1])
        if key not in seen:
            sub = period_trace(key, j)
            seen[key] = EnumeratedPeriod(key, sub, busy_periods(run(sub, FCFS))[0])
    periods = sorted(seen.values(), key=lambda p: (len(p.gaps), p.gaps))
    return Enumeration(model, max_gaps, periods, count, truncated, mismatches)


def count_periods_by_rule(j: int, delta: int, max_gaps: int) -> int:
    """Distinct first busy periods reachable within ``max_gaps``, from the end rule alone."""
    model = _check_enum_params(j, delta, max_gaps)

    def walk(m, total):
        # m jobs so far with internal gaps summing to ``total``; the period
        # closes at the m-th gap if even the long gap leaves no backlog
        found = 1 if m * j <= total + model.j2 and m <= max_gaps else 0
        if m < max_gaps:
            for y in (model.j1, model.j2):
                if m * j > total + y:  # still busy when job m+1 arrives
                    found += walk(m + 1, total + y)
        return found

    return walk(1, 0)


def verify_spst_vs_fcfs(j: int, delta: int, kappas: Sequence[float] = (LN2, 1.0, 2.0),
                        max_gaps: int = 12,
                        enumeration: Enumeration | None = None) -> VerificationReport:
    """Per-period reward dominance of SPST over FCFS.

    Values of kappa below ln 2 are exploratory: violations are counted in
    ``notes`` but do not fail the report.
    """
    if any(k <= 0 for k in kappas):
        raise ValueError("kappa must be positive")
    enum = enumeration or enumerate_busy_periods(j, delta, max_gaps)
    report = VerificationReport(f"theorem j={j} delta={delta}")
    report.truncated = enum.truncated
    judged = [k for k in kappas if k >= LN2]
    exploratory = [k for k in kappas if k < LN2]
    below = {k: 0 for k in exploratory}
    for item in enum.periods:
        gaps, bp = item.gaps, item.period
        w_spst = run(item.trace, SPST).sojourns.astype(float)
        w_fcfs = run(item.trace, FCFS).sojourns.astype(float)
        for kappa in kappas:
            r_spst = float(_total(np.exp(-kappa * w_spst)))
            r_fcfs = float(_total(np.exp(-kappa * w_fcfs)))
            case = f"j={j} delta={delta} kappa={kappa:.12g} gaps={list(gaps)}"
            if kappa in below:
                below[kappa] += r_spst < r_fcfs * (1 - REL_TOL)
                continue
            report.record("dominance", r_spst >= r_fcfs * (1 - REL_TOL), case,
                          f">= {r_fcfs!r}", repr(r_spst))
            if bp.n < 3:
                report.record("equal_below_3", r_spst == r_fcfs, case, repr(r_fcfs), repr(r_spst))
            report.cases_checked += 1
    if exploratory:
        report.notes["exploratory_violations"] = below
        bad = [k for k, v in below.items() if v]
        report.notes["min_violating_kappa"] = min(bad) if bad else None
        report.notes["max_violating_kappa"] = max(bad) if bad else None
    report.notes["periods"] = len(enum)
    report.notes["judged_kappas"] = judged
    return report


def verify_lemmas(j: int, delta: int, max_gaps: int = 12,
                  enumeration: Enumeration | None = None) -> VerificationReport:
    """Audit the priority-job lemmas, FCFS properties and block claims."""
    enum = enumeration or enumerate_busy_periods(j, delta, max_gaps)
    model = enum.model
    report = VerificationReport(f"lemmas j={j} delta={delta}")
    report.truncated = enum.truncated
    report.record("end_rule_consistent", enum.rule_mismatches == 0, f"j={j} delta={delta}",
                  0, enum.rule_mismatches)
    predicted = count_periods_by_rule(j, delta, enum.max_gaps)
    report.record("coverage", predicted == len(enum), f"j={j} delta={delta}", predicted, len(enum))
    for item in enum.periods:
        gaps, bp = item.gaps, item.period
        n = bp.n
        case = f"j={j} delta={delta} gaps={list(gaps)}"
        spst = run(item.trace, SPST)
        fcfs = run(item.trace, FCFS)
        w_s = period_sojourns(bp, spst)
        w_f = period_sojourns(bp, fcfs)
        dec = block_decompose(bp, model)
        p_s = int(np.count_nonzero(w_s == j))
        p_f = int(np.count_nonzero(w_f == j))

        report.record("spst_priority_ceil", p_s >= -(-n // 2), case, f">= {-(-n // 2)}", p_s)
        a_sizes = [len(m) for k, m in dec.blocks if k == "A"]
        if n % 2 == 0 and all(s % 2 == 0 for s in a_sizes):
            report.record("spst_priority_even", p_s >= n // 2 + 1, case, f">= {n // 2 + 1}", p_s)
        for kind, members in dec.blocks:
            if kind == "A" and len(members) % 2 == 1:
                hit = any(w_s[p] == j + delta - 1 for p in members)
                report.record("spst_odd_block", hit, case, f"W={j + delta - 1} in block {members}",
                              [int(w_s[p]) for p in members])
            if kind == "A":
                even = [p for i, p in enumerate(members, 1) if i % 2 == 0]
                report.record("claim_even_index_A", all(w_s[p] == j for p in even), case,
                              f"W={j} at {even}", [int(w_s[p]) for p in even])
            else:
                report.record("claim_block_B", all(w_s[p] == j for p in members), case,
                              f"W={j} at {list(members)}", [int(w_s[p]) for p in members])

        report.record("fcfs_one_priority", p_f == 1, case, 1, p_f)
        report.record("fcfs_others_wait", bool(np.all(w_f[1:] >= j + 1)), case, f">= {j + 1}",
                      w_f.tolist())
        if n >= 3:
            report.record("fcfs_long_wait", bool(w_f.max() >= j + delta), case, f"max >= {j + delta}",
                          w_f.tolist())
        closed = fcfs_sojourns_closed_form(gaps, j)
        report.record("fcfs_closed_form", closed == w_f.tolist(), case, closed, w_f.tolist())

        report.record("claim_counts", dec.n_j1 + dec.n_j2 == n - 1, case, n - 1, dec.n_j1 + dec.n_j2)
        if n > 1:
            ok = dec.kinds[0] == "A" and dec.n_A - dec.n_B in (0, 1)
            report.record("claim_first_block", ok, case, "starts with A, n_A-n_B in {0,1}", dec.kinds)
        # before the period ends the short gaps outnumber the long ones
        k1 = k2 = 0
        ok = True
        for y in gaps:
            k1 += y == model.j1
            k2 += y == model.j2
            ok &= k2 <= k1
        report.record("remark_k2_le_k1", ok, case, "k2 <= k1 on every prefix", gaps)
        report.cases_checked += 1
    return report


def verify_all_enumerated(js: Sequence[int] = (4, 6, 8), kappas: Sequence[float] = (LN2, 1.0, 2.0),
                          max_gaps: int = 12) -> tuple[VerificationReport, VerificationReport]:
    """Theorem and lemma reports over ``delta = floor(j/2)`` for each ``j``."""
    theorem = VerificationReport("theorem")
    lemmas = VerificationReport("lemmas")
    for j in js:
        delta = j // 2
        enum = enumerate_busy_periods(j, delta, max_gaps)
        theorem.merge(verify_spst_vs_fcfs(j, delta, kappas, max_gaps, enum))
        lemmas.merge(verify_lemmas(j, delta, max_gaps, enum))
    return theorem, lemmas
