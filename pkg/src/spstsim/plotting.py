"""Render figure CSV rows to image files, plus an optional gnuplot script."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .disciplines import DisciplineSpec  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.2),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "savefig.dpi": 150,
}

_MARKERS = "osD^v<>ph*x"


def _series(rows: Sequence[Mapping], xkey: str):
    out: dict[str, list[tuple[float, float, float]]] = {}
    for r in rows:
        mean = float(r["mean_reward"])
        ci = r.get("ci_halfwidth", "")
        ci = float(ci) if ci not in ("", None) and not (isinstance(ci, float) and math.isnan(ci)) else 0.0
        out.setdefault(str(r["discipline"]), []).append((float(r[xkey]), mean, ci))
    return out


def plot_figure(rows: Sequence[Mapping], path, title: str = "") -> Path:
    """Plot log10 mean reward per discipline against ``j`` or ``kappa``."""
    if not rows:
        raise ValueError("nothing to plot")
    xs = {str(r["j"]) for r in rows}
    xkey = "kappa" if len(xs) == 1 else "j"
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, (name, pts) in enumerate(_series(rows, xkey).items()):
            pts.sort()
            x = [p[0] for p in pts]
            y = [math.log10(p[1]) if p[1] > 0 else float("nan") for p in pts]
            # ci on the log scale via the delta method
            err = [p[2] / (p[1] * math.log(10)) if p[1] > 0 else 0.0 for p in pts]
            ax.errorbar(x, y, yerr=err, marker=_MARKERS[i % len(_MARKERS)], ms=4, capsize=2,
                        lw=1, label=DisciplineSpec.parse(name).label)
        if xkey == "kappa":
            ax.set_xscale("log")
            ax.set_xlabel(r"$\kappa$")
        else:
            ax.set_xlabel("job size $j$")
        ax.set_ylabel(r"$\log_{10}$ long-term average reward")
        if title:
            ax.set_title(title, fontsize=9)
        ax.legend(ncol=2)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def gnuplot_script(csv_path, rows: Sequence[Mapping], title: str = "") -> str:
    xs = {str(r["j"]) for r in rows}
    kappa = len(xs) == 1
    xcol = 6 if kappa else 3  # 1-based columns of FIGURE_COLUMNS
    names = list(dict.fromkeys(str(r["discipline"]) for r in rows))
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel '" + ("kappa" if kappa else "job size j") + "'",
        "set ylabel 'log10 long-term average reward'",
    ]
    if kappa:
        lines.append("set logscale x")
    plots = [f"'{csv_path}' using (strcol(7) eq '{n}' ? ${xcol} : 1/0):9 with linespoints "
             f"title '{n.upper()}'" for n in names]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
