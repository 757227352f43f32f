"""Scalar root-finding helpers shared by the solvers."""

from __future__ import annotations

import math

from scipy.optimize import brentq

from .errors import NumericalError

TOL_ROOT = 1e-10


def find_root(f, a: float, b: float, *, xtol: float = TOL_ROOT, fa=None, fb=None) -> float:
    """Root of f on a sign-change bracket [a, b].

    Wide brackets (> 1) are first narrowed by plain bisection; solvers
    here can be very flat near one end, where inverse interpolation is
    unreliable. The remainder is handed to Brent's method.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise NumericalError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    while b - a > 1.0:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if math.copysign(1.0, fm) == math.copysign(1.0, fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return float(brentq(f, a, b, xtol=xtol, rtol=8.9e-16, maxiter=200))


def expand_bracket(
    f, a: float, b: float, *, grow: float = 2.0, limit: float, fa=None
) -> tuple[float, float, float, float]:
    """Grow b geometrically until f changes sign relative to f(a).

    Returns (a, b, fa, fb). Raises NumericalError once b would exceed
    `limit` without a sign change. Non-finite f values of definite sign
    (inf) are usable; nan aborts the search.
    """
    fa = f(a) if fa is None else fa
    if math.isnan(fa):
        raise NumericalError(f"f({a}) is nan while bracketing")
    sa = math.copysign(1.0, fa)
    while True:
        fb = f(b)
        if math.isnan(fb):
            raise NumericalError(f"f({b}) is nan while bracketing")
        if fb == 0.0 or math.copysign(1.0, fb) != sa:
            return a, b, fa, fb
        if b >= limit:
            raise NumericalError(
                f"bracket exhausted: no sign change up to {limit} (f stays {sa:+.0f})"
            )
        b = min(b * grow, limit)
