"""Command-line front end: simulate, sweep, figures, verify, trace-dump.

Exit codes: 0 success / all checks pass, 1 verification violation,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

from . import __version__
from . import oracles
from .engine import run
from .experiments import (CONFIG_KEYS, FIGURE_COLUMNS, FIGURES, ConfigError, ExperimentConfig,
                          make_trace, parse_kappa, read_keyvalue, reproduce_figure,
                          run_experiment, to_csv)
from .metrics import Exponential, period_table
from .plotting import gnuplot_script, plot_figure
from .workloads import RNG_NAME

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _write(text: str, out: str | None):
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _write_meta(out: str | None, command: str, items: dict):
    if not out:
        return
    meta = {"command": command, "version": __version__, "rng": RNG_NAME, **items,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    Path(str(out) + ".meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


def _config(args) -> ExperimentConfig:
    values = read_keyvalue(Path(args.config).read_text()) if args.config else {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return ExperimentConfig.from_mapping(values)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="key=value config file")
    p.add_argument("--model", choices=("two_point", "bernoulli", "batch"))
    p.add_argument("--j", help="job size")
    p.add_argument("--delta", help="two-point offset (default floor(j/2))")
    p.add_argument("--p", help="Bernoulli arrival probability (default 1/(j+1))")
    p.add_argument("--sizes", help="batch sizes, comma separated")
    p.add_argument("--disciplines", help="e.g. fcfs,spst,spst-r")
    p.add_argument("--kappas", help="comma separated; 'ln2' allowed")
    p.add_argument("--jobs", help="jobs per replication")
    p.add_argument("--horizon", help="Bernoulli horizon in slots (default jobs*(j+1))")
    p.add_argument("--replications")
    p.add_argument("--seed")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--workers", help="parallel worker processes")


def cmd_simulate(args) -> int:
    config = _config(args)
    rows = run_experiment(config)
    _write(to_csv(rows), config.out)
    _write_meta(config.out, "simulate", {"config": config.to_text().strip().replace("\n", ";")})
    if args.periods:
        if config.model == "batch":
            model = None
        else:
            model = config.arrival_model()
        trace = make_trace(config, 0)
        f = Exponential(config.kappas[0])
        table = []
        for disc in config.disciplines:
            result = run(trace, disc, exact_ps=False)
            two_point = model if config.model == "two_point" else None
            for row in period_table(result, two_point, f):
                table.append({"discipline": disc.name, **row})
        _write(to_csv(table), args.periods)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.j_values is None and not args.config:
        args.j_values = "2..12"
    return cmd_simulate(args)


def cmd_figures(args) -> int:
    ids = list(FIGURES) if "all" in args.ids else args.ids
    for fig_id in ids:
        if fig_id not in FIGURES:
            raise ConfigError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}")
    outdir = Path(args.out or "figures")
    outdir.mkdir(parents=True, exist_ok=True)
    for fig_id in ids:
        rows = reproduce_figure(fig_id, seed=args.seed, jobs=args.jobs,
                                replications=args.replications, workers=args.workers)
        csv_path = outdir / f"{fig_id}.csv"
        csv_path.write_text(to_csv(rows, FIGURE_COLUMNS))
        _write_meta(csv_path, "figures", {"figure": fig_id, "seed": args.seed, "jobs": args.jobs,
                                          "replications": args.replications})
        if not args.no_plot:
            plot_figure(rows, outdir / f"{fig_id}.png", FIGURES[fig_id].title)
        if args.gnuplot:
            (outdir / f"{fig_id}.gp").write_text(
                gnuplot_script(csv_path.name, rows, FIGURES[fig_id].title))
        print(f"{fig_id}: {len(rows)} rows -> {csv_path}")
    return EXIT_OK


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_verify(args) -> int:
    suites = ("batch", "theorem", "lemmas") if args.suite == "all" else (args.suite,)
    kappas = [parse_kappa(k) for k in args.kappas.split(",") if k.strip()]
    js = _ints(args.js)
    if not 1 <= args.max_gaps <= oracles.MAX_GAPS_CAP:
        raise ConfigError(f"--max-gaps must lie in [1, {oracles.MAX_GAPS_CAP}]")
    reports = []
    if "batch" in suites:
        reports.append(oracles.verify_batch_theorem(args.n_max, (args.size_min, args.size_max),
                                                    instance_count=args.instances, seed=args.seed))
    if "theorem" in suites or "lemmas" in suites:
        for j in js:
            delta = args.delta if args.delta is not None else j // 2
            enum = oracles.enumerate_busy_periods(j, delta, args.max_gaps)
            if "theorem" in suites:
                reports.append(oracles.verify_spst_vs_fcfs(j, delta, kappas, args.max_gaps, enum))
            if "lemmas" in suites:
                reports.append(oracles.verify_lemmas(j, delta, args.max_gaps, enum))
    summary, violations = [], []
    for rep in reports:
        print(rep.summary())
        for check, (cases, bad) in rep.checks.items():
            summary.append({"report": rep.name, "check": check, "cases": cases,
                            "violations": bad, "passed": int(bad == 0)})
        for v in rep.violations:
            violations.append({"report": rep.name, "check": v.check, "case": v.case,
                               "expected": v.expected, "observed": v.observed})
        if rep.truncated:
            print(f"  {rep.truncated} gap sequences truncated (period longer than max_gaps)")
        for key, value in rep.notes.items():
            if key.startswith(("exploratory", "min_", "max_")):
                print(f"  {key}: {value}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"verify_{args.suite}.csv").write_text(
            to_csv(summary, ("report", "check", "cases", "violations", "passed")))
        (outdir / f"violations_{args.suite}.csv").write_text(
            to_csv(violations, ("report", "check", "case", "expected", "observed")))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


def cmd_trace_dump(args) -> int:
    config = _config(args)
    trace = make_trace(config, args.replication)
    _write(trace.to_text(), config.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spstsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replicated runs of one configuration")
    _add_config_flags(p)
    p.add_argument("--j-values", dest="j_values", help="sweep over job sizes, e.g. 2..12")
    p.add_argument("--periods", metavar="PATH", help="also write per-busy-period analytics")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate over a range of job sizes")
    _add_config_flags(p)
    p.add_argument("--j-values", dest="j_values", help="default 2..12")
    p.add_argument("--periods", metavar="PATH", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="reproduce the figure datasets (CSV + PNG)")
    p.add_argument("ids", nargs="+", help=f"{', '.join(FIGURES)} or all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1_000_000)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="DIR", help="output directory (default ./figures)")
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG render")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="exhaustive checks of the batch theorem and SPST lemmas")
    p.add_argument("suite", choices=("batch", "theorem", "lemmas", "all"))
    p.add_argument("--js", default="4,6,8", help="job sizes for theorem/lemmas")
    p.add_argument("--delta", type=int, help="default floor(j/2)")
    p.add_argument("--kappas", default="ln2,1,2")
    p.add_argument("--max-gaps", type=int, default=12)
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--size-min", type=int, default=1)
    p.add_argument("--size-max", type=int, default=10)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR", help="write report CSVs here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trace-dump", help="write a generated trace as 'arrival_time,size' lines")
    _add_config_flags(p)
    p.add_argument("--replication", type=int, default=0)
    p.set_defaults(func=cmd_trace_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"spstsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
