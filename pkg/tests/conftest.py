"""Shared fixtures: the worked example model (constant drift 0.06,
variance rate 0.03, discounting 0.02) in both representations, and the
deadline-bounded full-scale Monte Carlo protocol shared between the
simulator tests and the acceptance suite."""

import time

import numpy as np
import pytest

from condiv import (
    SimConfig,
    simulate_policy,
    solve_canonical,
    solve_equilibrium,
    solve_fixed_cost,
    value_J,
    value_R,
    wiener_drift,
)
from condiv.expr import parse_coefficient
from condiv.model import DiffusionModel

# full-scale oracle-equivalence protocol (criterion 6): stated scale,
# run in cheap-first order under a wall-clock budget
MC_N_PATHS = 200_000
MC_DT = 1e-3
MC_BUDGET_S = 300.0


@pytest.fixture(scope="session")
def model():
    return wiener_drift(0.06, 0.03, 0.02)


@pytest.fixture(scope="session")
def g(model):
    return solve_canonical(model)


@pytest.fixture(scope="session")
def model_grid():
    # same coefficients forced through the general-diffusion path
    return DiffusionModel(
        parse_coefficient("0.06"), parse_coefficient("sqrt(0.03)"), 0.02, "general"
    )


@pytest.fixture(scope="session")
def g_grid(model_grid):
    return solve_canonical(model_grid)


@pytest.fixture(scope="session")
def golden_policies(g):
    """The six solved golden policies: three equilibrium, three fixed-cost."""
    return {
        "eq_k0.99": solve_equilibrium(g, 0.99).policy,
        "eq_k0.5": solve_equilibrium(g, 0.5).policy,
        "eq_k0.01": solve_equilibrium(g, 0.01).policy,
        "fc_c0.1": solve_fixed_cost(g, 0.1).policy,
        "fc_c0.6": solve_fixed_cost(g, 0.6).policy,
        "fc_c2.0": solve_fixed_cost(g, 2.0).policy,
    }


@pytest.fixture(scope="session")
def oracle_runs(model, g, golden_policies):
    """Run the full-scale simulation protocol once per session.

    Eighteen (policy, x0) runs at n=200k, dt=1e-3, ordered so the
    cheapest and the anchor run execute first; each run starts only
    while the wall-clock budget is unspent. Returns a dict with the
    per-run results and timing evidence.
    """
    order = []
    for name in ("eq_k0.99", "eq_k0.5", "eq_k0.01", "fc_c0.1", "fc_c0.6", "fc_c2.0"):
        pol = golden_policies[name]
        starts = [("xbar", pol.x_upper), ("0.5", 0.5), ("1", 1.0)]
        for label, x0 in starts:
            order.append((name, label, pol, x0))
    # cheap-first: the k=0.99 policy dies fastest; its barrier start is
    # near-instant. The k=0.5 barrier start is the published R = 2.0
    # anchor and runs second.
    priority = {
        ("eq_k0.99", "xbar"): 0, ("eq_k0.5", "xbar"): 1, ("eq_k0.99", "0.5"): 2,
        ("eq_k0.99", "1"): 3, ("eq_k0.5", "0.5"): 4, ("eq_k0.5", "1"): 5,
    }
    order.sort(key=lambda item: priority.get((item[0], item[1]), 10))

    results = []
    t0 = time.perf_counter()
    steps_done = 0
    for i, (name, label, pol, x0) in enumerate(order):
        elapsed = time.perf_counter() - t0
        if elapsed >= MC_BUDGET_S and i >= 2:
            break
        cfg = SimConfig.for_model(model, dt=MC_DT, n_paths=MC_N_PATHS, seed=1000 + i)
        run_t = time.perf_counter()
        estJ, estR, paths = simulate_policy(model, pol, x0, cfg, return_paths=True)
        run_el = time.perf_counter() - run_t
        steps_done += int(
            np.sum(np.where(paths.ruin_step >= 0, paths.ruin_step,
                            int(cfg.t_horizon / cfg.dt)))
        )
        results.append({
            "policy": name, "x0_label": label, "x0": x0,
            "est_J": estJ, "est_R": estR,
            "closed_J": float(value_J(g, pol, x0)),
            "closed_R": float(value_R(g, pol, x0)),
            "seconds": run_el,
        })
    return {
        "runs": results,
        "total": len(order),
        "elapsed": time.perf_counter() - t0,
        "steps_done": steps_done,
        "n_paths": MC_N_PATHS,
        "dt": MC_DT,
        "budget": MC_BUDGET_S,
    }
