import numpy as np
import pytest

from condiv import (
    BarrierPolicy,
    NoDividendPolicy,
    equilibrium_candidate,
    equilibrium_value,
    solve_equilibrium,
    value_J,
    value_R,
    value_U,
    verify_equilibrium,
)

# full-precision roots from an independent brentq script
TRUE_BARRIERS = {
    0.01: (1.1205540280556812, 1.1506533404508743),
    0.5: (0.3756980817254856, 1.9892600539503655),
    0.99: (0.005906499185531988, 3.2056190607724373),
}
PUBLISHED = {0.01: (1.1206, 1.1507), 0.5: (0.3757, 1.9893), 0.99: (0.0059, 3.2056)}
# value-function anchor: g(1)/g'(xu) evaluated independently with
# the published 4-dp upper barrier for k=0.5
EQ_VALUE_ANCHOR = 2.3529968705198097


@pytest.mark.parametrize("k", [0.01, 0.5, 0.99])
def test_golden_barriers(g, k):
    s = solve_equilibrium(g, k)
    assert s.policy.x_lower == pytest.approx(PUBLISHED[k][0], abs=1e-4)
    assert s.policy.x_upper == pytest.approx(PUBLISHED[k][1], abs=1e-4)
    assert s.policy.x_lower == pytest.approx(TRUE_BARRIERS[k][0], abs=1e-9)
    assert s.policy.x_upper == pytest.approx(TRUE_BARRIERS[k][1], abs=1e-9)
    assert s.residual_46 <= 1e-10
    assert s.residual_42 <= 1e-10
    assert s.smoothfit_residual <= 1e-10


def test_constraint_identities(g):
    for k in (0.25, 0.5, 0.9, 1.0):
        s = solve_equilibrium(g, k)
        lo, hi = s.policy.x_lower, s.policy.x_upper
        assert value_R(g, s.policy, hi) == pytest.approx(1.0 / k, abs=1e-10)
        assert value_R(g, s.policy, lo) == pytest.approx(1.0 / k - 1.0, abs=1e-10)


def test_smooth_fit_by_central_differences(g):
    h = 1e-6
    for k in (0.1, 0.5, 0.99):
        s = solve_equilibrium(g, k)
        hi = s.policy.x_upper
        d = (3 * value_J(g, s.policy, hi) - 4 * value_J(g, s.policy, hi - h)
             + value_J(g, s.policy, hi - 2 * h)) / (2 * h)
        assert abs(d - 1.0) <= 1e-8


def test_root_uniqueness_probe(g):
    # F changes sign exactly once on (x*, x_max) for each k
    from condiv.equilibrium import _F

    for k in (0.1, 0.5, 0.99):
        xs = np.linspace(g.x_b * (1 + 1e-9), g.x_max, 2000)
        vals = np.array([_F(g, x, k) for x in xs])
        changes = np.sum(np.diff(np.sign(vals)) != 0.0)
        assert changes == 1


def test_barriers_straddle_reflection_point(g):
    for k in (1e-7, 1e-4, 0.01, 0.5, 0.99, 1.0):
        s = solve_equilibrium(g, k)
        assert 0.0 <= s.policy.x_lower < g.x_b < s.policy.x_upper


def test_ruin_strategy_iff_k_equals_one(g):
    assert solve_equilibrium(g, 1.0).policy.x_lower == 0.0
    for k in (0.999, 0.5, 0.01):
        assert solve_equilibrium(g, k).policy.x_lower > 0.0


def test_k_above_one_never_pays(g):
    s = solve_equilibrium(g, 1.5)
    assert isinstance(s.policy, NoDividendPolicy)
    assert equilibrium_value(g, s, 2.0) == 0.0
    assert not s.pays_dividends


def test_invalid_k(g):
    with pytest.raises(ValueError):
        solve_equilibrium(g, 0.0)
    with pytest.raises(ValueError):
        solve_equilibrium(g, -0.5)


def test_convergence_ladder(g):
    ks = [0.5, 0.25, 0.1, 0.01]
    sols = [solve_equilibrium(g, k) for k in ks]
    uppers = [s.policy.x_upper for s in sols]
    lowers = [s.policy.x_lower for s in sols]
    assert np.all(np.diff(uppers) < 0.0)
    assert all(u > g.x_b for u in uppers)
    assert np.all(np.diff(lowers) > 0.0)
    assert all(l < g.x_b for l in lowers)
    vals = [equilibrium_value(g, s, 1.0) for s in sols]
    assert np.all(np.diff(vals) > 0.0)
    assert vals[-1] < value_U(g, 1.0)
    assert vals[-1] == pytest.approx(value_U(g, 1.0), rel=1e-3)


def test_value_identity_and_closed_form(g):
    s = solve_equilibrium(g, 0.5)
    for x in (0.0, 0.7, s.policy.x_upper, s.policy.x_upper + 2.0):
        assert equilibrium_value(g, s, x) == value_J(g, s.policy, x)
    # below the barrier the value is g(x)/g'(xu)
    for x in (0.3, 1.0, 1.9):
        assert equilibrium_value(g, s, x) == pytest.approx(
            g.g(x) / g.gp(s.policy.x_upper), rel=1e-9
        )
    # anchor computed independently with the published barrier
    assert equilibrium_value(g, s, 1.0) == pytest.approx(EQ_VALUE_ANCHOR, rel=1e-3)


def test_tiny_k_stays_resolved(g):
    # the naive form of the root equation has no significance left here
    s = solve_equilibrium(g, 1e-7)
    width = s.policy.x_upper - s.policy.x_lower
    assert width == pytest.approx(1e-7 * g.g(g.x_b) / g.gp(g.x_b), rel=1e-4)
    assert abs(s.policy.x_upper - g.x_b) < 5e-7


def test_certificate_passes_for_solution(g):
    for k in (0.5, 0.99):
        s = solve_equilibrium(g, k)
        cert = verify_equilibrium(g, s, n_grid=400)
        assert cert.passed
        assert cert.n_grid == 400
        assert all(c.passed for c in cert.checks)


def test_certificate_fails_for_perturbed_policy(g):
    s = solve_equilibrium(g, 0.5)
    pert = equilibrium_candidate(
        g, 0.5, BarrierPolicy(s.policy.x_lower, s.policy.x_upper + 0.3)
    )
    cert = verify_equilibrium(g, pert, n_grid=400)
    assert not cert.passed
    by_name = {c.name: c for c in cert.checks}
    gen = by_name["generator condition (EqII')"]
    assert not gen.passed
    # the broken smooth fit is witnessed at the shifted barrier
    assert gen.witness[0] == pytest.approx(s.policy.x_upper + 0.3, abs=1e-9)
    # the lump-deviation condition also breaks for this perturbation
    assert not by_name["lump deviation (EqIII)"].passed


def test_certificate_no_dividend_trivial(g):
    s = solve_equilibrium(g, 1.5)
    cert = verify_equilibrium(g, s, n_grid=100)
    assert cert.passed
    assert all(c.passed for c in cert.checks)


def test_certificate_documents_substitution(g):
    cert = verify_equilibrium(g, solve_equilibrium(g, 0.5))
    text = cert.summary()
    assert "sufficient condition" in text
    assert "generator" in text
    assert "not evaluated directly" in cert.note


def test_grid_path_agrees(g, g_grid):
    a = solve_equilibrium(g, 0.5)
    b = solve_equilibrium(g_grid, 0.5)
    assert a.policy.x_lower == pytest.approx(b.policy.x_lower, abs=1e-7)
    assert a.policy.x_upper == pytest.approx(b.policy.x_upper, abs=1e-7)
