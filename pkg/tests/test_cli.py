import csv
import io

import pytest

from spstsim.cli import main
from spstsim.experiments import ExperimentConfig, ConfigError, read_csv


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_all_ok(tmp_path, capsys):
    assert main(["verify", "all", "--max-gaps", "8", "--instances", "10", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "batch: PASS" in out and "lemmas j=8 delta=4: PASS" in out
    summary = read_csv(tmp_path / "verify_all.csv")
    assert summary and all(r["passed"] == "1" for r in summary)
    assert read_csv(tmp_path / "violations_all.csv") == []


def test_verify_ln2_only():
    assert main(["verify", "theorem", "--kappas", "ln2", "--js", "4", "--max-gaps", "8"]) == 0


def test_verify_exploratory_kappa_reported(capsys):
    assert main(["verify", "theorem", "--kappas", "0.05,1", "--js", "4", "--max-gaps", "10"]) == 0
    assert "exploratory_violations" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["verify", "theorem", "--max-gaps", "40"],
    ["verify", "theorem", "--js", "4", "--delta", "3", "--max-gaps", "4"],
    ["simulate", "--model", "two_point", "--j", "4", "--delta", "9"],
    ["simulate", "--kappas", "-1"],
    ["simulate", "--disciplines", "ps-r"],
    ["simulate", "--config", "/nonexistent/file.cfg"],
    ["figures", "fig9", "--jobs", "10"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "spstsim: error" in capsys.readouterr().err


def test_bad_suite_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "everything"])
    assert exc.value.code == 2


def test_simulate_batch(capsys):
    assert main(["simulate", "--model", "batch", "--sizes", "1,3", "--disciplines", "sjf,fcfs",
                 "--kappas", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["discipline"] for r in rows] == ["sjf", "fcfs"]
    assert float(rows[0]["total_reward"]) == pytest.approx(0.38619508006)


def test_simulate_rerun_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--j", "5", "--jobs", "2000", "--replications", "2", "--seed", "3",
            "--kappas", "0.5,1"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = (tmp_path / "a.csv.meta").read_text()
    assert "rng=numpy.PCG64" in meta and "timestamp=" in meta
    rows = read_csv(a)
    assert len(rows) == 6 * 2 * 2
    assert {r["censored"] for r in rows} == {"0"}


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bernoulli run\nmodel=bernoulli\nj=3\njobs=500\ndisciplines=fcfs,spst\n")
    assert main(["simulate", "--config", str(cfg), "--disciplines", "lcfs"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["discipline"] for r in rows] == ["lcfs"]
    assert rows[0]["model"] == "bernoulli" and rows[0]["p"] == "0.25"


def test_config_roundtrip(tmp_path):
    c = ExperimentConfig(model="bernoulli", j=6, kappas=(0.5, 2.0), jobs=10)
    path = tmp_path / "c.cfg"
    path.write_text(c.to_text())
    assert ExperimentConfig.load(path) == c
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"colour": "red"})


def test_periods_table(tmp_path, capsys):
    periods = tmp_path / "p.csv"
    assert main(["simulate", "--j", "4", "--jobs", "50", "--disciplines", "fcfs,spst",
                 "--periods", str(periods)]) == 0
    rows = read_csv(periods)
    assert {r["discipline"] for r in rows} == {"fcfs", "spst"}
    assert all(int(r["T"]) == 4 * int(r["n"]) for r in rows)


def test_sweep_default_range(capsys):
    assert main(["sweep", "--jobs", "200", "--disciplines", "fcfs"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [int(r["j"]) for r in rows] == list(range(2, 13))


def test_trace_dump(capsys):
    assert main(["trace-dump", "--j", "4", "--jobs", "5", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and lines[0] == "0,4"
    arrivals = [int(x.split(",")[0]) for x in lines]
    assert {b - a for a, b in zip(arrivals, arrivals[1:])} <= {3, 7}


def test_figures_small(tmp_path, capsys):
    assert main(["figures", "fig2", "fig3b", "--jobs", "300", "--replications", "2",
                 "--out", str(tmp_path), "--gnuplot"]) == 0
    for fig in ("fig2", "fig3b"):
        assert (tmp_path / f"{fig}.png").stat().st_size > 0
        assert (tmp_path / f"{fig}.csv.meta").exists()
        assert "plot " in (tmp_path / f"{fig}.gp").read_text()
    rows = read_csv(tmp_path / "fig2.csv")
    assert len(rows) == 11 * 6
    assert len(read_csv(tmp_path / "fig3b.csv")) == 13 * 9
