"""Barrier policies and their closed-form value functionals.

A constant lump sum barrier policy (x_lower, x_upper) pays a dividend
of fixed size x_upper - x_lower whenever the surplus reaches x_upper,
dropping it back to x_lower (plus a possible time-zero payment of
x - x_lower when starting at x >= x_upper). In terms of the canonical
solution g:

    J(x) = g(x) (xu - xl) / (g(xu) - g(xl))     for x <= xu
           x - xl + J(xl)                        for x >  xu
    R(x) = g(x) / (g(xu) - g(xl))                for x <= xu
           1 + R(xl)                             for x >  xu
    H(x; c) = J(x) - c R(x)
    U(x) = g(x) / g'(x*)  for x <= x*, linear with unit slope above

J is the expected discounted sum of dividends, R the expected
discounted number of payments, H the fixed-cost value, U the value of
the unconstrained reflection solution at the barrier x* (= inflection
point of g). All are normalization-free ratios of g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import CanonicalSolution


@dataclass(frozen=True)
class BarrierPolicy:
    x_lower: float
    x_upper: float

    def __post_init__(self):
        if not (0.0 <= self.x_lower < self.x_upper):
            raise ValueError(
                f"need 0 <= x_lower < x_upper, got ({self.x_lower}, {self.x_upper})"
            )

    @property
    def dividend(self) -> float:
        return self.x_upper - self.x_lower


@dataclass(frozen=True)
class NoDividendPolicy:
    """Never pay anything; J and R are identically zero."""


def _zeros_like(x):
    if np.ndim(x) == 0:
        return 0.0
    return np.zeros(np.shape(x))


def value_J(g: CanonicalSolution, p, x):
    """Expected discounted dividends under p, starting from x."""
    if isinstance(p, NoDividendPolicy):
        return _zeros_like(x)
    lo, hi = p.x_lower, p.x_upper
    xv = np.asarray(x, dtype=float)
    scale = p.dividend / g.g_diff(hi, lo)
    below = np.asarray(g.g(np.minimum(xv, hi))) * scale
    above = xv - lo + g.g(lo) * scale
    out = np.where(xv <= hi, below, above)
    return float(out) if np.ndim(x) == 0 else out


def value_R(g: CanonicalSolution, p, x):
    """Expected discounted number of payments under p, starting from x."""
    if isinstance(p, NoDividendPolicy):
        return _zeros_like(x)
    lo, hi = p.x_lower, p.x_upper
    xv = np.asarray(x, dtype=float)
    denom = g.g_diff(hi, lo)
    below = np.asarray(g.g(np.minimum(xv, hi))) / denom
    above = 1.0 + g.g(lo) / denom
    out = np.where(xv <= hi, below, above)
    return float(out) if np.ndim(x) == 0 else out


def value_H(g: CanonicalSolution, c: float, p, x):
    """Fixed-cost value J - c R (the identity is the definition here)."""
    if not c > 0:
        raise ValueError(f"cost must be positive, got {c}")
    J = np.asarray(value_J(g, p, x))
    R = np.asarray(value_R(g, p, x))
    out = J - c * R
    return float(out) if np.ndim(x) == 0 else out


def value_U(g: CanonicalSolution, x):
    """Value of the unconstrained problem (reflection at x* = x_b)."""
    xs = g.x_b
    gp_star = g.gp(xs)
    xv = np.asarray(x, dtype=float)
    below = np.asarray(g.g(np.minimum(xv, xs))) / gp_star
    above = xv - xs + g.g(xs) / gp_star
    out = np.where(xv <= xs, below, above)
    return float(out) if np.ndim(x) == 0 else out
