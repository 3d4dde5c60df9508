"""Experiment configs, replicated runs and the figure sweeps."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .disciplines import DisciplineSpec, Kind, parse_disciplines
from .engine import SimResult, Trace, run
from .metrics import Exponential, cycles, long_run_average, renewal_estimate
from .workloads import (RNG_NAME, BernoulliModel, TwoPointModel, batch_trace,
                        bernoulli_trace, two_point_trace)

MODELS = ("two_point", "bernoulli", "batch")


class ConfigError(ValueError):
    pass


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_kappa(token: str) -> float:
    token = token.strip().lower()
    if token in ("ln2", "log2", "ln 2"):
        return math.log(2)
    return float(token)


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(parse_kappa(x) for x in str(text).split(",") if x.strip())


def _optional_int(text):
    return None if text in (None, "", "none") else int(text)


def _optional_float(text):
    return None if text in (None, "", "none") else float(text)


def _disciplines(text):
    if isinstance(text, (list, tuple)):
        return tuple(d if isinstance(d, DisciplineSpec) else DisciplineSpec.parse(d) for d in text)
    return tuple(parse_disciplines(text))


# key -> parser; the documented config-file key set
CONFIG_KEYS = {
    "model": str,
    "j": _optional_int,
    "delta": _optional_int,
    "p": _optional_float,
    "sizes": _ints,
    "disciplines": _disciplines,
    "kappas": _floats,
    "jobs": int,
    "horizon": _optional_int,
    "replications": int,
    "seed": int,
    "out": str,
    "j_values": _ints,
    "workers": int,
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "two_point"
    j: int | None = 4
    delta: int | None = None  # default floor(j/2)
    p: float | None = None  # default 1/(j+1)
    sizes: tuple[int, ...] = ()
    disciplines: tuple[DisciplineSpec, ...] = field(
        default_factory=lambda: tuple(parse_disciplines("fcfs,lcfs,srpt,psjf,ps,spst")))
    kappas: tuple[float, ...] = (1.0,)
    jobs: int = 100_000
    horizon: int | None = None
    replications: int = 1
    seed: int = 0
    out: str = ""
    j_values: tuple[int, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not self.disciplines:
            raise ConfigError("at least one discipline is required")
        if not self.kappas or any(not k > 0 for k in self.kappas):
            raise ConfigError("kappas must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.model == "batch":
            if not self.sizes or min(self.sizes) < 1:
                raise ConfigError("batch model needs positive sizes")
        else:
            for j in self.j_values or (self.j,):
                try:
                    self.arrival_model(j)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ExperimentConfig":
        kwargs = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            if raw is None:
                continue
            try:
                kwargs[key] = CONFIG_KEYS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path, overrides: Mapping[str, object] | None = None) -> "ExperimentConfig":
        values = read_keyvalue(Path(path).read_text())
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(values)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"

    def arrival_model(self, j: int | None = None):
        j = self.j if j is None else j
        if j is None:
            raise ValueError("job size j is required")
        if self.model == "two_point":
            return TwoPointModel(j, self.delta) if self.delta is not None else TwoPointModel.default(j)
        return BernoulliModel(j, self.p)

    def with_j(self, j: int) -> "ExperimentConfig":
        return replace(self, j=j, j_values=())


def read_keyvalue(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def replication_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Seed for one replication; ``key`` is (j, replication) for sweeps."""
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def make_trace(config: ExperimentConfig, replication: int, j: int | None = None) -> Trace:
    if config.model == "batch":
        return batch_trace(config.sizes)
    j = config.j if j is None else j
    model = config.arrival_model(j)
    ss = replication_seed(config.seed, j, replication)
    if config.model == "two_point":
        return two_point_trace(model, config.jobs, ss)
    horizon = config.horizon or config.jobs * (j + 1)
    return bernoulli_trace(model, horizon, ss)


def _priority_fraction(result: SimResult) -> float | None:
    if result.discipline.kind is Kind.PS:
        return None
    done = result.completed
    w = result.sojourns
    if w.size == 0:
        return None
    return float(np.mean(w == result.trace.sizes[done]))


def _replication_rows(config: ExperimentConfig, j, replication: int) -> list[dict]:
    trace = make_trace(config, replication, j)
    rows = []
    model = None if config.model == "batch" else config.arrival_model(j)
    for disc in config.disciplines:
        result = run(trace, disc, exact_ps=False)
        base = {
            "model": config.model,
            "j": "" if j is None else j,
            "delta": getattr(model, "delta", ""),
            "p": getattr(model, "p", ""),
            "sizes": " ".join(map(str, config.sizes)) if config.model == "batch" else "",
            "discipline": disc.name,
        }
        pf = _priority_fraction(result)
        for kappa in config.kappas:
            f = Exponential(kappa)
            completed = int(result.completed.sum())
            mean = long_run_average(result, f) if completed else float("nan")
            renewal = float("nan")
            if model is not None and completed and not result.censored_count:
                cyc = cycles(result, f, model.rate)
                if len(cyc):
                    renewal = renewal_estimate(cyc)
            rows.append({
                **base,
                "kappa": kappa,
                "replication": replication,
                "seed": config.seed,
                "rng": RNG_NAME,
                "n_jobs": len(trace),
                "completed": completed,
                "censored": result.censored_count,
                "busy_periods": int(result.period_start.size),
                "mean_reward": mean,
                "total_reward": math.fsum(f(np.asarray(result.sojourns, dtype=float)).tolist()),
                "renewal_estimate": renewal,
                "priority_fraction": "" if pf is None else pf,
            })
    return rows


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output is worker-count independent
        return list(pool.map(fn, *zip(*tasks)))


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """One row per (j, discipline, kappa, replication)."""
    js = config.j_values or (config.j,)
    reps = config.replications if config.model != "batch" else 1
    tasks = [(config, j if config.model != "batch" else None, r) for j in js for r in range(reps)]
    chunks = _map(_replication_rows, tasks, config.workers)
    # emit in (j, discipline, kappa, replication) order
    rows = [row for chunk in chunks for row in chunk]
    order = {d.name: i for i, d in enumerate(config.disciplines)}
    kap = {k: i for i, k in enumerate(config.kappas)}
    rows.sort(key=lambda r: (js.index(r["j"]) if r["j"] != "" else 0, order[r["discipline"]],
                             kap[r["kappa"]], r["replication"]))
    return rows


# -- figures ------------------------------------------------------------------

FULL_SET = "fcfs,lcfs,srpt,srpt-r,psjf,psjf-r,ps,spst,spst-r"
KAPPA_GRID = tuple(float(k) for k in np.round(np.logspace(-2, 1, 13), 12))
J_GRID = tuple(range(2, 13))


@dataclass(frozen=True)
class FigureSpec:
    model: str
    sweep: str  # "j" or "kappa"
    disciplines: str
    title: str


FIGURES = {
    "fig1": FigureSpec("two_point", "j", "srpt,psjf,fcfs,lcfs,ps",
                       "Job size vs. long-term average reward, kappa=1"),
    "fig2": FigureSpec("two_point", "j", "srpt,psjf,fcfs,lcfs,ps,spst",
                       "Job size vs. long-term average reward, kappa=1 (with SPST)"),
    "fig3a": FigureSpec("two_point", "j", FULL_SET,
                        "Two-point arrivals: job size vs. long-term average reward, kappa=1"),
    "fig3b": FigureSpec("two_point", "kappa", FULL_SET,
                        "Two-point arrivals: kappa vs. long-term average reward, j=4"),
    "fig4a": FigureSpec("bernoulli", "j", FULL_SET,
                        "Bernoulli arrivals: job size vs. long-term average reward, kappa=1"),
    "fig4b": FigureSpec("bernoulli", "kappa", FULL_SET,
                        "Bernoulli arrivals: kappa vs. long-term average reward, j=4"),
}

FIGURE_COLUMNS = ("figure", "model", "j", "delta", "p", "kappa", "discipline", "mean_reward",
                  "log10_mean_reward", "ci_halfwidth", "replications", "n_jobs", "seed", "rng")


def ci_halfwidth(values: Sequence[float], level: float = 0.95) -> float:
    """Student-t halfwidth over independent replication means."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return float("nan")
    return float(stats.t.ppf(0.5 + level / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))


def _figure_point(spec: FigureSpec, j: int, kappas: tuple[float, ...], replication: int,
                  jobs: int, seed: int, disciplines: tuple[DisciplineSpec, ...]):
    config = ExperimentConfig(model=spec.model, j=j, disciplines=disciplines, kappas=kappas,
                              jobs=jobs, seed=seed)
    trace = make_trace(config, replication, j)
    out = {}
    for disc in disciplines:
        w = run(trace, disc, exact_ps=False).sojourns.astype(float)
        for kappa in kappas:
            out[disc.name, kappa] = float(np.mean(np.exp(-kappa * w)))
    return out


def reproduce_figure(fig_id: str, seed: int = 0, jobs: int = 1_000_000, replications: int = 10,
                     workers: int = 1, j_values: Sequence[int] | None = None,
                     kappas: Sequence[float] | None = None,
                     disciplines: str | None = None) -> list[dict]:
    try:
        spec = FIGURES[fig_id]
    except KeyError:
        raise ConfigError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}") from None
    discs = tuple(parse_disciplines(disciplines or spec.disciplines))
    if spec.sweep == "j":
        points = [(j, (1.0,)) for j in (j_values or J_GRID)]
    else:
        points = [(4, tuple(kappas or KAPPA_GRID))]
    tasks = [(spec, j, ks, r, jobs, seed, discs) for j, ks in points for r in range(replications)]
    results = _map(_figure_point, tasks, workers)
    rows = []
    for pi, (j, ks) in enumerate(points):
        reps = results[pi * replications:(pi + 1) * replications]
        model = (TwoPointModel.default(j) if spec.model == "two_point" else BernoulliModel(j))
        for kappa in ks:
            for disc in discs:
                vals = [rep[disc.name, kappa] for rep in reps]
                mean = float(np.mean(vals))
                rows.append({
                    "figure": fig_id,
                    "model": spec.model,
                    "j": j,
                    "delta": getattr(model, "delta", ""),
                    "p": getattr(model, "p", ""),
                    "kappa": kappa,
                    "discipline": disc.name,
                    "mean_reward": mean,
                    "log10_mean_reward": math.log10(mean) if mean > 0 else float("-inf"),
                    "ci_halfwidth": ci_halfwidth(vals),
                    "replications": replications,
                    "n_jobs": jobs,
                    "seed": seed,
                    "rng": RNG_NAME,
                })
    return rows


# -- csv ----------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.12g}"
    return str(value)


def to_csv(rows: Iterable[Mapping[str, object]], columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
