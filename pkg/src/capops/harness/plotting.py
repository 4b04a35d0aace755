"""Standalone plotting scripts generated from report artifacts.

Each script reads only the CSV files next to it and saves a PNG of the same
stem; it imports nothing from this package, so it can be copied and edited.
"""

from __future__ import annotations

import runpy
from pathlib import Path

import matplotlib

_HEADER = '''\
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
plt.rcParams.update({"font.size": 9, "axes.grid": True, "grid.alpha": 0.3,
                     "figure.figsize": (5.0, 3.4), "savefig.dpi": 150})


def read(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}

'''

_BODIES = {
    "spectrum": '''\
d = read("spectrum.csv")
fig, ax = plt.subplots()
ax.semilogy(d["n"], d["a_n"], lw=1, label="$a_n$")
if any(u != a for u, a in zip(d["upper"], d["a_n"])):
    ax.fill_between(d["n"], d["lower"], d["upper"], alpha=0.3, label="bracket")
ax.set_xlabel("n")
ax.set_ylabel("singular value")
ax.legend()
''',
    "beta": '''\
d = read("beta.csv")
fig, ax = plt.subplots()
ax.plot(d["n"], d["b_n"], "o", ms=2, label="$a_{n^N}^{1/n}$")
ax.plot(d["n"], d["beta_minus"], lw=0.8, label="tail min")
ax.plot(d["n"], d["beta_plus"], lw=0.8, label="tail max")
ax.axhline(d["gamma"][0], color="k", ls="--", lw=0.8, label=r"$\\Gamma_N$")
ax.set_xlabel("n")
ax.legend()
''',
    "widths": '''\
d = read("widths.csv")
fig, ax = plt.subplots()
ax.fill_between(d["n"], d["lower"], d["upper"], alpha=0.3, label="width bracket")
ax.semilogy(d["n"], d["lower"], lw=0.8)
ax.semilogy(d["n"], d["upper"], lw=0.8)
ax.set_xlabel("n")
ax.set_ylabel("$d_n$")
ax.legend()
''',
    "width_fit": '''\
d = read("width_fit.csv")
fig, ax = plt.subplots()
ax.plot(d["n"], d["neg_log_width"], "o", ms=3, label="$-\\\\log d_{n^N}$")
ax.plot(d["n"], d["fitted"], lw=1, label="least squares")
ax.plot(d["n"], d["target"], "k--", lw=0.8, label="capacity rate")
ax.set_xlabel("n")
ax.legend()
''',
    "mata": '''\
d = read("mata.csv")
fig, ax = plt.subplots()
ax.plot(d["A"], d["ratio"], "o-", ms=3)
ax.axhline(1.0, color="k", ls="--", lw=0.8)
ax.set_xlabel("A")
ax.set_ylabel("count / asymptotic")
''',
    "dilation": '''\
d = read("dilation.csv")
fig, ax = plt.subplots()
for k in d:
    if k != "n":
        ax.semilogy(d["n"], d[k], lw=1, label=k)
ax.set_xlabel("n")
ax.legend()
''',
    "truncation": '''\
d = read("truncation.csv")
fig, ax = plt.subplots()
ax.semilogy(d["D"], [max(v, 1e-300) for v in d["observed_change"]], "o-", label="observed change")
ax.semilogy(d["D"], d["certificate"], "s--", label="certificate")
ax.set_xlabel("D")
ax.legend()
''',
}

_FOOTER = '''\
fig.tight_layout()
fig.savefig(HERE / "{stem}.png")
plt.close(fig)
'''


def emit_plots(report) -> list[Path]:
    """Write one script per plottable artifact; returns the script paths."""
    out = Path(report.directory)
    scripts = []
    for art in report.artifacts:
        body = _BODIES.get(art.kind)
        if body is None:
            continue
        stem = f"plot_{art.kind}"
        path = out / f"{stem}.py"
        path.write_text(_HEADER + body + _FOOTER.format(stem=stem))
        scripts.append(path)
    return scripts


def render_plots(scripts) -> list[Path]:
    """Execute generated scripts in-process; returns the PNG paths."""
    matplotlib.use("Agg")
    pngs = []
    for s in scripts:
        runpy.run_path(str(s), run_name="__main__")
        pngs.append(Path(s).with_suffix(".png"))
    return pngs
