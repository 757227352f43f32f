"""Reproduction sweeps: seven CSV tables plus rendered PNG companions.

The CSVs are the contract (deterministic, byte-identical across runs
for the analytic solvers); the PNGs are a convenience rendering of the
same arrays. Sweep grids:

    fig1  canonical solution g on [0, 5]
    fig2  fixed-cost value functions for c in {0.1, 0.6, 2.0}
    fig3  precommitment value V(x0) for k in {0.4, 0.8}
    fig4  equilibrium value functions for k in {0.01, 0.5, 0.99}
    fig5  fixed-cost value and barriers vs c, at x0 = 0.025
    fig6  precommitment value and barriers vs k, at x0 = 0.025
    fig7  equilibrium value and barriers vs k, at x = 0.025

Schemas are documented in the README. Floats are written with repr
(shortest round-trip) so files re-parse exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .canonical import CanonicalSolution
from .equilibrium import solve_equilibrium
from .fixed_cost import solve_fixed_cost
from .policy import value_H, value_J
from .precommit import solve_precommitment

SENSITIVITY_X0 = 0.025

FIG2_COSTS = (0.1, 0.6, 2.0)
FIG3_KS = (0.4, 0.8)
FIG3_X0S = tuple([0.0, 0.025, 0.05, 0.075] + [round(0.1 * i, 10) for i in range(1, 28)])
FIG4_KS = (0.01, 0.5, 0.99)
FIG5_COSTS = tuple([1e-6] + [round(0.025 * i, 10) for i in range(1, 26)])
# irregular grid concentrating where the value-vs-k curve bends
FIG6_KS = (
    0.00893212311126738, 0.0414599533993498, 0.0893276984221259,
    0.152781418451972, 0.192518305771818, 0.242609835560409,
    0.300000112827751, 0.350133850844845, 0.400000000048371,
    0.464836614589025, 0.504629778154618, 0.564542335424184,
    0.632054272689476,
)
FIG7_KS = tuple([1e-7] + [round(0.025 * i, 10) for i in range(1, 26)])


@dataclass(frozen=True)
class FigureResult:
    name: str
    csv_path: Path
    png_path: Path | None
    n_rows: int


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating))
                        and not isinstance(v, bool) else v for v in row])


def _save_lines(path: Path, x, series: dict, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fig1(g: CanonicalSolution):
    xs = np.linspace(0.0, 5.0, 401)
    return ["x", "g"], [[x, g.g(x)] for x in xs], xs, {"g(x)": [g.g(x) for x in xs]}, "x", "g(x)"


def _fig2(g: CanonicalSolution):
    sols = {c: solve_fixed_cost(g, c) for c in FIG2_COSTS}
    xs = np.linspace(0.0, 6.0, 481)
    cols = {}
    for c, s in sols.items():
        cols[f"H_c{c:g}"] = [value_H(s.canonical, c, s.policy, x) for x in xs]
    header = ["x"] + list(cols)
    rows = [[x] + [cols[k][i] for k in cols] for i, x in enumerate(xs)]
    return header, rows, xs, cols, "x", "H(x; c)"


def _fig3(g: CanonicalSolution):
    cols = {}
    for k in FIG3_KS:
        vals = []
        for x0 in FIG3_X0S:
            vals.append(0.0 if x0 == 0.0 else solve_precommitment(g, x0, k).V)
        cols[f"V_k{k:g}"] = vals
    header = ["x0"] + list(cols)
    rows = [[x0] + [cols[c][i] for c in cols] for i, x0 in enumerate(FIG3_X0S)]
    return header, rows, np.asarray(FIG3_X0S), cols, "x0", "V(x0)"


def _fig4(g: CanonicalSolution):
    xs = np.linspace(0.0, 5.0, 401)
    cols = {}
    for k in FIG4_KS:
        sol = solve_equilibrium(g, k)
        cols[f"J_k{k:g}"] = [value_J(sol.canonical, sol.policy, x) for x in xs]
    header = ["x"] + list(cols)
    rows = [[x] + [cols[c][i] for c in cols] for i, x in enumerate(xs)]
    return header, rows, xs, cols, "x", "equilibrium value"


def _fig5(g: CanonicalSolution):
    header = ["c", "H_at_x0", "x_lower", "x_upper", "case"]
    rows = []
    hs, los, his = [], [], []
    for c in FIG5_COSTS:
        s = solve_fixed_cost(g, c)
        h = value_H(s.canonical, c, s.policy, SENSITIVITY_X0)
        rows.append([c, h, s.x_lower, s.x_upper, s.case])
        hs.append(h)
        los.append(s.x_lower)
        his.append(s.x_upper)
    cs = np.asarray(FIG5_COSTS)
    return header, rows, cs, {"value": hs, "x_lower": los, "x_upper": his}, "c", "fixed-cost value / barriers"


def _fig6(g: CanonicalSolution):
    header = ["k", "V_at_x0", "x_lower", "x_upper", "c_star"]
    rows = []
    vs, los, his = [], [], []
    for k in FIG6_KS:
        s = solve_precommitment(g, SENSITIVITY_X0, k)
        rows.append([k, s.V, s.policy.x_lower, s.policy.x_upper, s.c_star])
        vs.append(s.V)
        los.append(s.policy.x_lower)
        his.append(s.policy.x_upper)
    ks = np.asarray(FIG6_KS)
    return header, rows, ks, {"value": vs, "x_lower": los, "x_upper": his}, "k", "precommitment value / barriers"


def _fig7(g: CanonicalSolution):
    header = ["k", "J_at_x", "x_lower", "x_upper"]
    rows = []
    vs, los, his = [], [], []
    for k in FIG7_KS:
        s = solve_equilibrium(g, k)
        j = value_J(s.canonical, s.policy, SENSITIVITY_X0)
        rows.append([k, j, s.policy.x_lower, s.policy.x_upper])
        vs.append(j)
        los.append(s.policy.x_lower)
        his.append(s.policy.x_upper)
    ks = np.asarray(FIG7_KS)
    return header, rows, ks, {"value": vs, "x_lower": los, "x_upper": his}, "k", "equilibrium value / barriers"


_BUILDERS = {
    "fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4,
    "fig5": _fig5, "fig6": _fig6, "fig7": _fig7,
}


def reproduce_figures(
    g: CanonicalSolution, out_dir, *, render: bool = True, names=None
) -> list[FigureResult]:
    """Emit fig1..fig7 CSVs (and PNGs unless render is off) into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for name in names or sorted(_BUILDERS):
        header, rows, x, series, xlabel, ylabel = _BUILDERS[name](g)
        csv_path = out / f"{name}.csv"
        _write_csv(csv_path, header, rows)
        png_path = None
        if render:
            png_path = out / f"{name}.png"
            _save_lines(png_path, x, series, xlabel, ylabel)
        results.append(FigureResult(name, csv_path, png_path, len(rows)))
    return results
