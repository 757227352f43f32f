"""Fixed-cost dividend problem: smooth-fit barriers for a cost c per payment.

The optimal policy maximizes H(x; c) = J(x) - c R(x) and is a barrier
policy determined by smooth fit. Writing d = xu - xl - c, the interior
system is

    B(xl, xu) = g'(xl) d - g(xu) + g(xl) = 0
    C(xl, xu) = g'(xu) d - g(xu) + g(xl) = 0      0 < xl < x* < xu,

equivalently g'(xl) = g'(xu) = (g(xu) - g(xl)) / d. When it has no
solution the lower barrier sits at ruin, xl = 0, and xu solves

    A(xu) = g'(xu) (xu - c) - g(xu) = 0           xu > max(x*, c).

Interior solutions are found by damped Newton from (x*/2, 2 x*), whose
Jacobian is nonsingular on the region; a slope-parametrized bisection
on s = g'(xl) = g'(xu) is the fallback and also decides interior vs
ruin (an interior solution exists iff phi(s) turns negative before s
reaches g'(0)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .canonical import CanonicalSolution
from .errors import NumericalError
from .policy import BarrierPolicy, value_H
from .rootfind import TOL_ROOT, find_root

# interior iterates pinned this close to 0 mean the case is ruin
_RUIN_EDGE = 1e-8


@dataclass(frozen=True)
class FixedCostSolution:
    c: float
    policy: BarrierPolicy
    case: str  # "interior" | "ruin"
    residuals: float
    canonical: CanonicalSolution = field(repr=False)
    value_at: Callable = field(repr=False)

    @property
    def x_lower(self) -> float:
        return self.policy.x_lower

    @property
    def x_upper(self) -> float:
        return self.policy.x_upper


def _system(g, c, xl, xu):
    d = xu - xl - c
    base = g.g_diff(xu, xl)
    return g.gp(xl) * d - base, g.gp(xu) * d - base


def _newton_interior(g, c, x_star):
    """Damped Newton on (B, C). Returns (xl, xu, g) or None on failure.

    Convergence is judged on the step size, not the residual: for small
    c the Jacobian entries scale like g'' (xu - xl - c) and a residual
    criterion would leave the barriers orders of magnitude less
    accurate than the constraint bisection downstream needs.
    """
    xl, xu = 0.5 * x_star, 2.0 * x_star
    g = g.ensure(xu)
    B, C = _system(g, c, xl, xu)
    res = max(abs(B), abs(C))
    for _ in range(80):
        d = xu - xl - c
        j11 = g.gpp(xl) * d
        j22 = g.gpp(xu) * d
        j12 = g.gp(xl) - g.gp(xu)
        det = j11 * j22 - j12 * j12
        if det == 0.0 or not np.isfinite(det):
            return None
        dxl = -(B * j22 - C * j12) / det
        dxu = -(C * j11 - B * j12) / det
        lam = 1.0
        while True:
            nl, nu = xl + lam * dxl, xu + lam * dxu
            ok = _RUIN_EDGE < nl < x_star < nu and nu - nl > c
            if ok:
                try:
                    g = g.ensure(nu)
                except NumericalError:
                    ok = False
            if ok:
                nB, nC = _system(g, c, nl, nu)
                nres = max(abs(nB), abs(nC))
                if nres < res or nres == 0.0:
                    xl, xu, B, C, res = nl, nu, nB, nC, nres
                    break
            lam *= 0.5
            if lam < 1e-8:
                return None
        if lam == 1.0 and max(abs(dxl), abs(dxu)) <= 1e-14 * (1.0 + xu):
            return xl, xu, g
    return None


def _grow_to_sign_change(g, f, lo, flo, hi):
    """Expand hi (doubling, growing the domain as needed) to a sign change."""
    sa = np.sign(flo)
    while True:
        g = g.ensure(min(hi, g.x_limit))
        fhi = f(g, hi)
        if np.isnan(fhi):
            raise NumericalError(f"nan at {hi} while bracketing")
        if fhi == 0.0 or np.sign(fhi) != sa:
            return g, lo, hi, flo, fhi
        if hi >= g.x_limit:
            raise NumericalError(
                f"bracket exhausted: no sign change up to growth cap {g.x_limit:.6g}"
            )
        lo, flo = hi, fhi
        hi = min(hi * 2.0, g.x_limit)


def _bisect_interior(g, c, x_star):
    """Slope-parametrized reduction of the interior system.

    For a common slope s in (g'(x*), g'(0)) there is exactly one
    xl(s) in (0, x*) and one xu(s) > x*. The leftover equation
    phi(s) = g(xu) - g(xl) - s (xu - xl - c) is positive near g'(x*)
    and has a root iff it is negative as s approaches g'(0).
    Returns (xl, xu, g) or None meaning the case is ruin.
    """
    state = {"g": g}

    def pair_for(s):
        gg = state["g"]
        xl = find_root(lambda x: gg.gp(x) - s, 0.0, x_star, xtol=1e-14)
        gg, lo, hi, flo, fhi = _grow_to_sign_change(
            gg, lambda h, x: h.gp(x) - s, x_star, gg.gp(x_star) - s, 2.0 * x_star
        )
        state["g"] = gg
        xu = find_root(lambda x: gg.gp(x) - s, lo, hi, xtol=1e-14, fa=flo, fb=fhi)
        return xl, xu

    def phi(s):
        xl, xu = pair_for(s)
        gg = state["g"]
        return gg.g_diff(xu, xl) - s * (xu - xl - c)

    s_hi = g.gp(0.0) * (1.0 - 1e-12)
    if phi(s_hi) > 0.0:
        return None
    s_lo = g.gp(x_star) * (1.0 + 1e-12)
    s = find_root(phi, s_lo, s_hi, xtol=1e-15)
    xl, xu = pair_for(s)
    return xl, xu, state["g"]


def _solve_ruin(g, c, x_star):
    lo = max(x_star, c) * (1.0 + 1e-12)

    def A(gg, x):
        return gg.gp(x) * (x - c) - gg.g(x)

    g = g.ensure(min(lo * 2.0, g.x_limit))
    flo = A(g, lo)
    if flo >= 0.0:
        raise NumericalError(f"ruin-case equation has no root above {lo:.6g}")
    g, a, b, fa, fb = _grow_to_sign_change(g, A, lo, flo, lo * 2.0)
    xu = find_root(partial(A, g), a, b, xtol=TOL_ROOT, fa=fa, fb=fb)
    return xu, g


def solve_fixed_cost(g: CanonicalSolution, c: float) -> FixedCostSolution:
    """Optimal barrier policy for payment cost c > 0."""
    if not c > 0:
        raise NumericalError(f"cost must be positive, got {c}")
    x_star = g.x_b

    result = _newton_interior(g, c, x_star)
    if result is None:
        result = _bisect_interior(g, c, x_star)

    if result is not None:
        xl, xu, g = result
        B, C = _system(g, c, xl, xu)
        resid = max(abs(B), abs(C)) / max(1.0, abs(g.g(xu)))
        return _finish(g, c, BarrierPolicy(xl, xu), "interior", resid)

    xu, g = _solve_ruin(g, c, x_star)
    resid = abs(g.gp(xu) * (xu - c) - g.g(xu)) / max(1.0, abs(g.g(xu)))
    return _finish(g, c, BarrierPolicy(0.0, xu), "ruin", resid)


def _finish(g, c, policy, case, resid) -> FixedCostSolution:
    xl, xu = policy.x_lower, policy.x_upper
    if not (0.0 <= xl < g.x_b < xu):
        raise NumericalError(
            f"barriers ({xl:.6g}, {xu:.6g}) do not straddle x*={g.x_b:.6g}"
        )
    if not xu > c:
        raise NumericalError(f"upper barrier {xu:.6g} not above cost {c:.6g}")
    if resid > TOL_ROOT:
        raise NumericalError(f"smooth-fit residual {resid:.3g} above tolerance")
    return FixedCostSolution(
        c=c,
        policy=policy,
        case=case,
        residuals=resid,
        canonical=g,
        value_at=partial(value_H, g, c, policy),
    )


def ruin_cost_threshold(g: CanonicalSolution, *, xtol: float = TOL_ROOT) -> float:
    """Cost level above which the optimal policy has x_lower = 0.

    Located by bisection on the interior/ruin case flag of
    solve_fixed_cost; the lower barrier collapses monotonically in c,
    so the flag flips exactly once.
    """

    def is_ruin(c):
        return solve_fixed_cost(g, c).case == "ruin"

    lo = 0.5
    while is_ruin(lo):
        lo *= 0.25
        if lo < 1e-12:
            raise NumericalError("ruin case persists at vanishing cost")
    hi = max(1.0, 2.0 * lo)
    while not is_ruin(hi):
        hi *= 2.0
        if hi > 1e9:
            raise NumericalError("no ruin case found for any cost up to 1e9")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if is_ruin(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
