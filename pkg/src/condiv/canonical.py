"""Canonical solution of mu g' + (1/2) sigma^2 g'' = r g, g(0) = 0.

Every value function in this package is a ratio of this one function,
so it is solved once per model and shared. Two representations:

* constant coefficients: the closed form scale * (e^{a1 x} - e^{a2 x});
* general coefficients: an adaptive RK45 integration of the equivalent
  first-order system, sampled on a dense uniform grid and interpolated
  with cubic Hermite splines on (g, g'). The second derivative is
  always recovered from the ODE identity g'' = 2 (r g - mu g') / sigma^2
  rather than by differentiating the interpolant.

The solution is unique up to a positive factor; `gprime0` records the
normalization g'(0) in use (default 1). Everything downstream depends
on ratios only.

Evaluation below zero (hit only by bracketing probes) uses the natural
analytic continuation in the closed form and the linear extension
g'(0) * x in the grid form.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainTooSmallError, NumericalError
from .model import DEFAULT_X_MAX, DiffusionModel, require_valid
from .rootfind import TOL_ROOT, find_root

TOL_ODE = 1e-9

_GRID_STEP = 0.002
_MAX_DOUBLINGS = 10


def _scalar_or_array(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


class CanonicalSolution:
    """Shared interface of both representations."""

    model: DiffusionModel
    x_max: float
    gprime0: float
    x_b: float

    def g(self, x):
        raise NotImplementedError

    def gp(self, x):
        raise NotImplementedError

    def gpp(self, x):
        """Second derivative via the ODE identity."""
        gv = self.g(x)
        gpv = self.gp(x)
        return _scalar_or_array(
            x, 2.0 * (self.model.r * np.asarray(gv) - self.model.mu(x) * np.asarray(gpv))
            / self.model.sigma2_at(x)
        )

    def curvature_gap(self, x, u):
        """g(x-u) - g(x) + u g'(x), the second-order Taylor remainder.

        This is the quantity the equilibrium equation lives on; the
        closed form computes it without cancellation (see subclass).
        """
        return self.g(x - u) - self.g(x) + u * self.gp(x)

    def g_diff(self, x, y):
        """g(x) - g(y), accurate relative to the difference itself.

        Every value functional divides by a difference of g values
        that can be orders of magnitude below g; the closed form
        factors it through expm1 so the result keeps full relative
        precision (see subclass).
        """
        return self.g(x) - self.g(y)

    def ode_residual(self, x):
        """mu g' + (1/2) sigma^2 g'' - r g at x.

        With g'' taken from the ODE identity this is zero by
        construction for the grid form; it is informative for the
        closed form and for externally supplied derivatives.
        """
        return _scalar_or_array(
            x,
            self.model.mu(x) * np.asarray(self.gp(x))
            + 0.5 * self.model.sigma2_at(x) * np.asarray(self._gpp_native(x))
            - self.model.r * np.asarray(self.g(x)),
        )

    def _gpp_native(self, x):
        return self.gpp(x)

    def ensure(self, x: float) -> "CanonicalSolution":
        """Return a solution whose domain covers x, growing by doubling.

        Growth is capped at 2**10 times the originally requested
        domain; beyond that a NumericalError signals that a bracket
        genuinely cannot be found.
        """
        if x <= self.x_max:
            return self
        if x > self.x_limit:
            raise NumericalError(
                f"required domain {x:.6g} exceeds growth cap {self.x_limit:.6g}"
            )
        new_max = self.x_max
        while new_max < x:
            new_max *= 2.0
        return self._with_x_max(min(new_max, self.x_limit))

    def rescaled(self, gprime0: float) -> "CanonicalSolution":
        raise NotImplementedError

    def _with_x_max(self, new_max: float) -> "CanonicalSolution":
        raise NotImplementedError

    def to_grid_dict(self, n: int = 201) -> dict:
        """JSON-shaped grid dump for debugging (see README for fields)."""
        xs = np.linspace(0.0, self.x_max, n)
        return {
            "x": [float(v) for v in xs],
            "g": [float(v) for v in np.asarray(self.g(xs))],
            "g_prime": [float(v) for v in np.asarray(self.gp(xs))],
            "normalization": self.gprime0,
            "x_b": self.x_b,
            "x_max": self.x_max,
            "kind": self.model.kind,
        }


class _WienerSolution(CanonicalSolution):
    def __init__(self, model, x_max, gprime0, x_limit):
        self.model = model
        self.x_max = float(x_max)
        self.gprime0 = float(gprime0)
        self.x_limit = float(x_limit)
        mu = model.mu.constant_value
        s2 = model.sigma.constant_value ** 2
        root = math.sqrt(mu * mu / (s2 * s2) + 2.0 * model.r / s2)
        self.alpha1 = -mu / s2 + root
        self.alpha2 = -mu / s2 - root
        self.scale = gprime0 / (self.alpha1 - self.alpha2)
        self.x_b = math.log(self.alpha2**2 / self.alpha1**2) / (self.alpha1 - self.alpha2)

    def g(self, x):
        xv = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self.scale * (np.exp(self.alpha1 * xv) - np.exp(self.alpha2 * xv))
        return _scalar_or_array(x, out)

    def gp(self, x):
        xv = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self.scale * (
                self.alpha1 * np.exp(self.alpha1 * xv)
                - self.alpha2 * np.exp(self.alpha2 * xv)
            )
        return _scalar_or_array(x, out)

    def _gpp_native(self, x):
        xv = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self.scale * (
                self.alpha1**2 * np.exp(self.alpha1 * xv)
                - self.alpha2**2 * np.exp(self.alpha2 * xv)
            )
        return _scalar_or_array(x, out)

    def gpp(self, x):
        return self._gpp_native(x)

    def curvature_gap(self, x, u):
        # e^{a x}(expm1(-a u) + a u) summed over the two exponents keeps
        # full significance for |a u| << 1, where the plain difference
        # g(x-u) - g(x) + u g'(x) loses everything to cancellation.
        xv = np.asarray(x, dtype=float)
        uv = np.asarray(u, dtype=float)
        a1, a2 = self.alpha1, self.alpha2
        with np.errstate(over="ignore"):
            out = self.scale * (
                np.exp(a1 * xv) * (np.expm1(-a1 * uv) + a1 * uv)
                - np.exp(a2 * xv) * (np.expm1(-a2 * uv) + a2 * uv)
            )
        return _scalar_or_array(x, out)

    def g_diff(self, x, y):
        xv = np.asarray(x, dtype=float)
        yv = np.asarray(y, dtype=float)
        a1, a2 = self.alpha1, self.alpha2
        with np.errstate(over="ignore"):
            out = self.scale * (
                np.exp(a1 * yv) * np.expm1(a1 * (xv - yv))
                - np.exp(a2 * yv) * np.expm1(a2 * (xv - yv))
            )
        return _scalar_or_array(x, out)

    def rescaled(self, gprime0: float) -> "_WienerSolution":
        return _WienerSolution(self.model, self.x_max, gprime0, self.x_limit)

    def _with_x_max(self, new_max: float) -> "_WienerSolution":
        return _WienerSolution(self.model, new_max, self.gprime0, self.x_limit)


class _GridSolution(CanonicalSolution):
    def __init__(self, model, x_max, gprime0, x_limit, xs, gv, gpv):
        self.model = model
        self.x_max = float(x_max)
        self.gprime0 = float(gprime0)
        self.x_limit = float(x_limit)
        self.xs = xs
        self.gv = gv
        self.gpv = gpv
        gppv = 2.0 * (model.r * gv - np.asarray(model.mu(xs)) * gpv) / model.sigma2_at(xs)
        self._spline_g = CubicHermiteSpline(xs, gv, gpv)
        self._spline_gp = CubicHermiteSpline(xs, gpv, gppv)
        self.x_b = self._locate_x_b(gppv)

    @classmethod
    def integrate(cls, model, x_max, gprime0, x_limit):
        def rhs(x, y):
            gpp = 2.0 * (model.r * y[0] - float(model.mu(x)) * y[1]) / float(
                model.sigma2_at(x)
            )
            return (y[1], gpp)

        sol = solve_ivp(
            rhs,
            (0.0, x_max),
            (0.0, gprime0),
            method="RK45",
            rtol=1e-12,
            atol=1e-14,
            dense_output=True,
        )
        if not sol.success:
            raise NumericalError(f"canonical ODE integration failed: {sol.message}")
        n = max(2001, int(round(x_max / _GRID_STEP)) + 1)  # step <= 0.002
        xs = np.linspace(0.0, x_max, n)
        vals = sol.sol(xs)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("canonical ODE solution blew up before x_max")
        return cls(model, x_max, gprime0, x_limit, xs, vals[0], vals[1])

    def _locate_x_b(self, gppv) -> float:
        sign = np.sign(gppv)
        flips = np.nonzero(np.diff(sign) > 0)[0]
        if flips.size == 0:
            raise DomainTooSmallError(
                f"g'' has no sign change on [0, {self.x_max}]; enlarge the domain"
            )
        i = int(flips[0])
        return find_root(self.gpp, float(self.xs[i]), float(self.xs[i + 1]), xtol=TOL_ROOT)

    def _clipped(self, x):
        xv = np.asarray(x, dtype=float)
        if np.any(xv > self.x_max * (1.0 + 1e-12)):
            raise NumericalError(
                f"evaluation at {float(np.max(xv)):.6g} outside represented "
                f"domain [0, {self.x_max:.6g}]; use ensure()"
            )
        return xv

    def g(self, x):
        xv = self._clipped(x)
        interior = self._spline_g(np.clip(xv, 0.0, self.x_max))
        return _scalar_or_array(x, np.where(xv >= 0.0, interior, self.gprime0 * xv))

    def gp(self, x):
        xv = self._clipped(x)
        interior = self._spline_gp(np.clip(xv, 0.0, self.x_max))
        return _scalar_or_array(x, np.where(xv >= 0.0, interior, self.gprime0))

    def rescaled(self, gprime0: float) -> "_GridSolution":
        c = gprime0 / self.gprime0
        return _GridSolution(
            self.model, self.x_max, gprime0, self.x_limit,
            self.xs, self.gv * c, self.gpv * c,
        )

    def _with_x_max(self, new_max: float) -> "_GridSolution":
        return _GridSolution.integrate(self.model, new_max, self.gprime0, self.x_limit)


def _check_invariants(sol: CanonicalSolution) -> None:
    xs = np.linspace(0.0, sol.x_max, 2001)
    gv = np.asarray(sol.g(xs))
    gpv = np.asarray(sol.gp(xs))
    scale = 1.0 + np.abs(gv)
    if abs(sol.g(0.0)) > 1e-12 * sol.gprime0:
        raise NumericalError(f"g(0) = {sol.g(0.0)} != 0")
    if not sol.gp(0.0) > 0:
        raise NumericalError("g'(0) must be positive")
    if np.any(gpv <= 0.0):
        i = int(np.argmax(gpv <= 0.0))
        raise NumericalError(
            f"g' not positive at x={xs[i]:.6g}: model outside the theory's reach"
        )
    resid = np.abs(np.asarray(sol.ode_residual(xs)))
    if np.any(resid > TOL_ODE * scale):
        i = int(np.argmax(resid / scale))
        raise NumericalError(
            f"ODE residual {resid[i]:.3g} at x={xs[i]:.6g} exceeds tolerance"
        )
    # strict concavity/convexity around the inflection point, allowing
    # a band of one sample spacing for interpolation noise
    gppv = np.asarray(sol.gpp(xs))
    band = xs[1] - xs[0]
    tol = TOL_ODE * np.max(scale)
    below = xs < sol.x_b - band
    above = xs > sol.x_b + band
    if np.any(gppv[below] >= tol) or np.any(gppv[above] <= -tol):
        raise NumericalError("g'' does not change sign exactly once around x_b")


def solve_canonical(
    m: DiffusionModel,
    x_max: float = DEFAULT_X_MAX,
    gprime0: float = 1.0,
    *,
    max_doublings: int = _MAX_DOUBLINGS,
    report=None,
) -> CanonicalSolution:
    """Solve the canonical boundary value problem for a validated model.

    The domain [0, x_max] doubles automatically (up to 2**max_doublings
    times x_max) until the inflection point x_b is inside it.
    """
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    if not gprime0 > 0:
        raise ValueError("normalization g'(0) must be positive")
    if report is None:
        require_valid(m, x_max=max(DEFAULT_X_MAX, x_max))
    elif not report.passed:
        raise NumericalError("model failed validation; refusing to solve")

    x_limit = x_max * 2.0**max_doublings
    current = x_max
    while True:
        try:
            if m.kind == "wiener-drift":
                sol = _WienerSolution(m, current, gprime0, x_limit)
                if sol.x_b > current:
                    raise DomainTooSmallError(
                        f"inflection point {sol.x_b:.6g} beyond x_max {current:.6g}"
                    )
            else:
                sol = _GridSolution.integrate(m, current, gprime0, x_limit)
            break
        except DomainTooSmallError:
            if current >= x_limit:
                raise
            current = min(current * 2.0, x_limit)
    _check_invariants(sol)
    return sol


def inflection_point(sol: CanonicalSolution) -> float:
    """The unique zero of g'' (located at construction time)."""
    return sol.x_b


def generator_apply(f, m: DiffusionModel, x: float, *, df=None, d2f=None, h: float = 1e-5):
    """mu(x) f'(x) + (1/2) sigma^2(x) f''(x) for a function handle.

    Derivative handles are used when given; otherwise second-order
    finite differences (one-sided near 0 so f is never probed below
    the domain).
    """
    if x < 0:
        raise NumericalError(f"x={x} outside domain")
    if df is not None:
        fp = df(x)
    elif x >= h:
        fp = (f(x + h) - f(x - h)) / (2.0 * h)
    else:
        fp = (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
    if d2f is not None:
        fpp = d2f(x)
    elif x >= h:
        fpp = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    else:
        fpp = (f(x) - 2.0 * f(x + h) + f(x + 2.0 * h)) / (h * h)
    return float(m.mu(x)) * fp + 0.5 * float(m.sigma2_at(x)) * fpp
