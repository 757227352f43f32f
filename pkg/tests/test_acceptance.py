"""Acceptance suite: one test per shipped criterion, each printing a
pass/fail line (run with -s to see them inline).

Criterion 6 runs the full-scale Monte Carlo protocol (n=200k paths,
dt=1e-3, eighteen policy/start combinations) under its five-minute
wall-clock budget via the shared session fixture; on hardware that
cannot complete the runs inside the budget it fails with the measured
throughput and the extrapolated total.
"""

import csv
import time

import numpy as np

from condiv import (
    BarrierPolicy,
    equilibrium_candidate,
    solve_canonical,
    solve_equilibrium,
    solve_fixed_cost,
    solve_precommitment,
    value_J,
    value_R,
    value_U,
    verify_equilibrium,
    wiener_drift,
)
from condiv.figures import reproduce_figures


def _report(num, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {num}: {detail}", flush=True)
    assert passed, f"criterion {num}: {detail}"


# ----------------------------------------------------------------- #
# published data tables (worked example: mu=0.06, sigma^2=0.03, r=0.02)
# ----------------------------------------------------------------- #

FC_GOLD = {0.1: (0.7670, 1.8528), 0.6: (0.5453, 2.9769), 2.0: (0.3183, 4.9580)}
EQ_GOLD = {0.01: (1.1206, 1.1507), 0.5: (0.3757, 1.9893), 0.99: (0.0059, 3.2056)}

# precommitment value curve V(x0), two constraint levels
V_GOLD = {
    0.4: {0.1: 0.803856424058494, 0.5: 2.14611371519001,
          1.0: 2.70139459726172, 2.0: 3.58614547732458},
    0.8: {0.1: 0.791525131935807, 0.5: 1.99461327451429,
          1.0: 2.45018837358318, 2.0: 3.13766064235084},
}

# sensitivity tables at start point 0.025: (abscissa, column, value)
FIG5_GOLD = [
    (1e-6, "H_at_x0", 0.23285063476179),
    (0.025, "H_at_x0", 0.2190000912156),
    (0.05, "H_at_x0", 0.211293827638586),
    (0.1, "H_at_x0", 0.19968468082339),
    (0.15, "H_at_x0", 0.190499446806344),
    (0.2, "H_at_x0", 0.182696266457372),
    (0.3, "H_at_x0", 0.169666900025165),
    (0.4, "H_at_x0", 0.158874143810545),
    (0.5, "H_at_x0", 0.149585839102762),
    (0.6, "H_at_x0", 0.141403234168786),
    (0.625, "H_at_x0", 0.139499249352213),
    (1e-6, "x_lower", 1.13018939439675),
    (1e-6, "x_upper", 1.15099157861911),
    (0.1, "x_lower", 0.767010883354394),
    (0.1, "x_upper", 1.85284650651488),
    (0.625, "x_lower", 0.539038681188981),
    (0.625, "x_upper", 3.0207150349188),
]
FIG6_GOLD = [
    (0.00893212311126738, "V_at_x0", 0.232867370751838),
    (0.0414599533993498, "V_at_x0", 0.232866220306548),
    (0.0893276984221259, "V_at_x0", 0.232861829497781),
    (0.152781418451972, "V_at_x0", 0.232851057083638),
    (0.192518305771818, "V_at_x0", 0.232841440053187),
    (0.242609835560409, "V_at_x0", 0.232826171574312),
    (0.300000112827751, "V_at_x0", 0.232804375008439),
    (0.350133850844845, "V_at_x0", 0.232781583600709),
    (0.400000000048371, "V_at_x0", 0.23275545488356),
    (0.464836614589025, "V_at_x0", 0.232716343036345),
    (0.504629778154618, "V_at_x0", 0.232689472961664),
    (0.564542335424184, "V_at_x0", 0.23264492626242),
    (0.632054272689476, "V_at_x0", 0.232588869959545),
    (0.00893212311126738, "x_lower", 1.13947859334401),
    (0.00893212311126738, "x_upper", 1.14155859336817),
    (0.400000000048371, "x_lower", 1.09541016490648),
    (0.400000000048371, "x_upper", 1.18851234687116),
    (0.632054272689476, "x_lower", 1.07060354773639),
    (0.632054272689476, "x_upper", 1.21761233677433),
]
FIG7_GOLD = [
    (0.025, "J_at_x", 0.232767217573785),
    (0.05, "J_at_x", 0.232454437077106),
    (0.075, "J_at_x", 0.231912649361208),
    (0.1, "J_at_x", 0.231128716896055),
    (0.15, "J_at_x", 0.228804422945915),
    (0.2, "J_at_x", 0.225475413631427),
    (0.3, "J_at_x", 0.216188368801758),
    (0.4, "J_at_x", 0.204491628307028),
    (0.5, "J_at_x", 0.191671141508639),
    (0.6, "J_at_x", 0.178599956823331),
    (0.625, "J_at_x", 0.175356456373894),
    (0.025, "x_lower", 1.09075414115241),
    (0.025, "x_upper", 1.16636790478205),
    (0.4, "x_lower", 0.484609935918758),
    (0.4, "x_upper", 1.772069426711),
    (0.625, "x_lower", 0.260956091372392),
    (0.625, "x_upper", 2.28018369499548),
]


def test_c1_classical_barrier():
    t0 = time.perf_counter()
    model = wiener_drift(0.06, 0.03, 0.02)
    sol = solve_canonical(model)
    xb = sol.x_b
    elapsed = time.perf_counter() - t0
    ok = abs(xb - 1.1405) <= 5e-5 and elapsed < 1.0
    _report(1, ok, f"x* = {xb:.8f} (target 1.1405 +- 5e-5), {elapsed:.3f}s")


def test_c2_fixed_cost_golden_triple(g):
    t0 = time.perf_counter()
    worst = 0.0
    for c, (lo, hi) in FC_GOLD.items():
        s = solve_fixed_cost(g, c)
        worst = max(worst, abs(s.x_lower - lo), abs(s.x_upper - hi))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 1.0
    _report(2, ok, f"worst barrier deviation {worst:.2e} (tol 1e-4), {elapsed:.3f}s")


def test_c3_equilibrium_golden_triple(g):
    t0 = time.perf_counter()
    worst = 0.0
    for k, (lo, hi) in EQ_GOLD.items():
        s = solve_equilibrium(g, k)
        worst = max(worst, abs(s.policy.x_lower - lo), abs(s.policy.x_upper - hi))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 1.0
    _report(3, ok, f"worst barrier deviation {worst:.2e} (tol 1e-4), {elapsed:.3f}s")


def test_c4_precommitment_curve(g):
    t0 = time.perf_counter()
    worst = 0.0
    for k, row in V_GOLD.items():
        for x0, want in row.items():
            s = solve_precommitment(g, x0, k)
            worst = max(worst, abs(s.V - want) / want)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 10.0
    _report(4, ok, f"worst relative error {worst:.2e} (tol 1e-4), {elapsed:.3f}s")


def _load_fig(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows


def _match(rows, key, abscissa, column, want):
    for row in rows:
        if np.isclose(float(row[key]), abscissa, rtol=1e-12, atol=0):
            return abs(float(row[column]) - want) / abs(want)
    raise AssertionError(f"abscissa {abscissa} missing from column {key}")


def test_c5_sensitivity_tables(g, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "figs"
    reproduce_figures(g, out, render=True, names=["fig5", "fig6", "fig7"])
    worst = 0.0
    rows5 = _load_fig(out / "fig5.csv")
    for c, col, want in FIG5_GOLD:
        worst = max(worst, _match(rows5, "c", c, col, want))
    rows6 = _load_fig(out / "fig6.csv")
    for k, col, want in FIG6_GOLD:
        worst = max(worst, _match(rows6, "k", k, col, want))
    rows7 = _load_fig(out / "fig7.csv")
    for k, col, want in FIG7_GOLD:
        worst = max(worst, _match(rows7, "k", k, col, want))
    # unconstrained reference value at the sensitivity start point
    worst = max(worst, abs(value_U(g, 0.025) - 0.23286742672297) / 0.23286742672297)
    elapsed = time.perf_counter() - t0
    n = len(FIG5_GOLD) + len(FIG6_GOLD) + len(FIG7_GOLD)
    ok = worst <= 1e-4 and elapsed < 60.0
    _report(5, ok, f"{n} coordinates, worst rel err {worst:.2e} (tol 1e-4), {elapsed:.1f}s")


def test_c6_oracle_equivalence(oracle_runs):
    runs = oracle_runs["runs"]
    contained = []
    misses = []
    for r in runs:
        devJ = abs(r["est_J"].mean - r["closed_J"]) / max(r["est_J"].stderr, 1e-300)
        devR = abs(r["est_R"].mean - r["closed_R"]) / max(r["est_R"].stderr, 1e-300)
        contained.append(devJ <= 3.0 and devR <= 3.0)
        if not contained[-1]:
            which = f"J {devJ:.1f}sd" if devJ > 3.0 else f"R {devR:.1f}sd"
            misses.append(f"{r['policy']}@x0={r['x0_label']} ({which})")
    done = len(runs)
    total = oracle_runs["total"]
    elapsed = oracle_runs["elapsed"]
    rate = oracle_runs["steps_done"] / max(elapsed, 1e-9)
    projected = total / max(done, 1) * elapsed
    detail = (
        f"{sum(contained)}/{done} completed runs contained (3 stderr)"
        f"{'; uncontained: ' + ', '.join(misses) if misses else ''}; "
        f"{done}/{total} runs finished in {elapsed:.0f}s at "
        f"{rate/1e6:.0f}M steps/s; full protocol projected ~{projected/60:.0f} min "
        f"vs 300s budget"
    )
    ok = all(contained) and done == total and elapsed < oracle_runs["budget"]
    _report(6, ok, detail)


def test_c7_property_suites(g):
    t0 = time.perf_counter()
    failures = []

    # smooth-fit residuals by central differences, 1e-8
    h = 1e-6
    for c in (0.1, 0.6, 2.0):
        s = solve_fixed_cost(g, c)
        d_up = (3 * s.value_at(s.x_upper) - 4 * s.value_at(s.x_upper - h)
                + s.value_at(s.x_upper - 2 * h)) / (2 * h)
        d_lo = (s.value_at(s.x_lower + h) - s.value_at(s.x_lower - h)) / (2 * h)
        if abs(d_up - 1.0) > 1e-8 or abs(d_lo - 1.0) > 1e-8:
            failures.append(f"fixed-cost smooth fit c={c}")
    for k in (0.01, 0.5, 0.99):
        s = solve_equilibrium(g, k)
        hi = s.policy.x_upper
        d = (3 * value_J(g, s.policy, hi) - 4 * value_J(g, s.policy, hi - h)
             + value_J(g, s.policy, hi - 2 * h)) / (2 * h)
        if abs(d - 1.0) > 1e-8:
            failures.append(f"equilibrium smooth fit k={k}")

    # payment-count monotonicity lattice
    for lo in np.linspace(0.0, 1.0, 5):
        vals = [value_R(g, BarrierPolicy(lo, hi), 0.8) for hi in np.linspace(1.2, 4, 7)]
        if not np.all(np.diff(vals) < 0):
            failures.append("R not decreasing in upper barrier")
    for hi in np.linspace(1.2, 4.0, 5):
        vals = [value_R(g, BarrierPolicy(lo, hi), 0.8) for lo in np.linspace(0, 1, 5)]
        if not np.all(np.diff(vals) > 0):
            failures.append("R not increasing in lower barrier")

    # fixed-cost ladders (monotone barriers, vanishing-cost convergence)
    fc = [solve_fixed_cost(g, c) for c in (0.05, 0.1, 0.2, 0.4, 0.8, 1.6)]
    if not np.all(np.diff([s.x_upper for s in fc]) > 0):
        failures.append("x_upper not increasing in c")
    if not np.all(np.diff([s.x_lower for s in fc]) < 0):
        failures.append("x_lower not decreasing in c")
    tiny = solve_fixed_cost(g, 1e-4)
    if not (abs(tiny.x_lower - g.x_b) < 0.05 and abs(tiny.x_upper - g.x_b) < 0.05):
        failures.append("barriers do not collapse to x* as c vanishes")

    # precommitment ladder and limit
    pc = [solve_precommitment(g, 1.0, k) for k in (0.1, 0.2, 0.4)]
    if not np.all(np.diff([s.policy.x_upper for s in pc]) > 0):
        failures.append("precommitment x_upper not increasing in k")
    if abs(solve_precommitment(g, 1.0, 1e-3).V - value_U(g, 1.0)) > 1e-3:
        failures.append("precommitment value does not approach unconstrained")

    # equilibrium ladder
    eq = [solve_equilibrium(g, k) for k in (0.5, 0.25, 0.1, 0.01)]
    if not np.all(np.diff([s.policy.x_upper for s in eq]) < 0):
        failures.append("equilibrium x_upper not decreasing toward x*")
    if not np.all(np.diff([s.policy.x_lower for s in eq]) > 0):
        failures.append("equilibrium x_lower not increasing toward x*")
    if not np.all(np.diff([value_J(g, s.policy, 1.0) for s in eq]) > 0):
        failures.append("equilibrium value not increasing as k vanishes")
    if solve_equilibrium(g, 1.0).policy.x_lower != 0.0:
        failures.append("k=1 lower barrier not exactly zero")
    if not solve_equilibrium(g, 0.9).policy.x_lower > 0.0:
        failures.append("k<1 lower barrier not positive")

    # certificate on 400-point grid, plus required failure for perturbation
    s = solve_equilibrium(g, 0.5)
    if not verify_equilibrium(g, s, n_grid=400).passed:
        failures.append("certificate fails on the solved equilibrium")
    pert = equilibrium_candidate(
        g, 0.5, BarrierPolicy(s.policy.x_lower, s.policy.x_upper + 0.3)
    )
    if verify_equilibrium(g, pert, n_grid=400).passed:
        failures.append("certificate passes on the perturbed policy")

    # normalization invariance of every solver barrier
    g7 = solve_canonical(wiener_drift(0.06, 0.03, 0.02), gprime0=7.0)
    pairs = [
        (solve_fixed_cost(g, 0.6).policy, solve_fixed_cost(g7, 0.6).policy),
        (solve_equilibrium(g, 0.5).policy, solve_equilibrium(g7, 0.5).policy),
        (solve_precommitment(g, 1.0, 0.4).policy,
         solve_precommitment(g7, 1.0, 0.4).policy),
    ]
    for a, b in pairs:
        if abs(a.x_lower - b.x_lower) > 1e-8 or abs(a.x_upper - b.x_upper) > 1e-8:
            failures.append("barriers depend on normalization")

    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120.0
    _report(7, ok, f"{'all properties hold' if not failures else failures}, {elapsed:.1f}s")


def test_c8_substitution_declared(g):
    s = solve_equilibrium(g, 0.5)
    cert = verify_equilibrium(g, s)
    text = cert.summary()
    ok = (
        "sufficient condition" in cert.note
        and "generator" in cert.note
        and "not evaluated directly" in cert.note
        and cert.note in text
    )
    _report(8, ok, "certificate output documents the generator-condition substitution")
