"""Diffusion model definition and assumption checks.

The uncontrolled surplus follows dX = mu(X) dt + sigma(X) dW with
discounting at rate r > 0. Every solver in this package requires the
standing assumptions to hold:

    A.1  mu, sigma smooth with Lipschitz first derivatives
    A.2  sigma(x)^2 > 0 on the working domain
    A.3  mu'(x) < r on the working domain
    A.4  a uniform margin mu'(x) <= r - eps0 (eps0 = 1e-6 * r)
    A.5  mu(0) > 0

All checks are performed on a finite grid {0, ..., x_max}; violations
beyond x_max are necessarily undetected. Derivatives are approximated
by finite differences (central in the interior, one-sided at 0), and
A.1 is approximated by requiring finite values and finite difference
quotients of mu, sigma and their first differences on the grid.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelValidationError
from .expr import CoefficientFunction, parse_coefficient

KINDS = ("general", "wiener-drift")

DEFAULT_X_MAX = 10.0
DEFAULT_N_GRID = 4001


@dataclass(frozen=True)
class DiffusionModel:
    """Drift, volatility and discount rate of the uncontrolled diffusion."""

    mu: CoefficientFunction
    sigma: CoefficientFunction
    r: float
    kind: str = "general"

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"discount rate must be positive, got {self.r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "wiener-drift":
            if not (self.mu.is_constant and self.sigma.is_constant):
                raise ValueError("wiener-drift requires constant mu and sigma")

    def mu_at(self, x):
        return self.mu(x)

    def sigma_at(self, x):
        return self.sigma(x)

    def sigma2_at(self, x):
        s = self.sigma(x)
        return s * s

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.source,
            "sigma": self.sigma.source,
            "r": self.r,
            "kind": self.kind,
        }


def wiener_drift(mu: float, sigma2: float, r: float) -> DiffusionModel:
    """Constant-coefficient model given drift and variance rate."""
    return DiffusionModel(
        mu=parse_coefficient(float(mu)),
        sigma=parse_coefficient(float(np.sqrt(sigma2))),
        r=float(r),
        kind="wiener-drift",
    )


def load_model(source) -> DiffusionModel:
    """Build a model from a JSON file path, JSON text, or a dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if not str(source).lstrip().startswith("{"):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        doc = json.loads(text)
    missing = {"mu", "sigma", "r"} - set(doc)
    if missing:
        raise ValueError(f"model document missing keys: {sorted(missing)}")
    return DiffusionModel(
        mu=parse_coefficient(doc["mu"]),
        sigma=parse_coefficient(doc["sigma"]),
        r=float(doc["r"]),
        kind=doc.get("kind", "general"),
    )


def model_digest(m: DiffusionModel) -> str:
    blob = json.dumps(m.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    worst_x: float | None = None
    worst_value: float | None = None
    detail: str = ""

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        loc = "" if self.worst_x is None else f" worst at x={self.worst_x:.6g}"
        val = "" if self.worst_value is None else f" value={self.worst_value:.6g}"
        return f"  {self.name}: {status}{loc}{val} {self.detail}".rstrip()


@dataclass(frozen=True)
class ValidationReport:
    checks: dict[str, AssumptionCheck]
    x_max: float
    n_grid: int
    fd_step: float = field(default=0.0)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def summary(self) -> str:
        head = (
            f"assumption checks on grid [0, {self.x_max}] "
            f"({self.n_grid} points, fd step {self.fd_step:.3g})"
        )
        return "\n".join([head] + [self.checks[k].line() for k in sorted(self.checks)])

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "x_max": self.x_max,
            "n_grid": self.n_grid,
            "checks": {
                k: {
                    "passed": c.passed,
                    "worst_x": c.worst_x,
                    "worst_value": c.worst_value,
                    "detail": c.detail,
                }
                for k, c in self.checks.items()
            },
        }


def _fd_derivative(f, xs: np.ndarray, h: float) -> np.ndarray:
    """Central differences, one-sided at the left edge (domain is x >= 0)."""
    d = (np.asarray(f(xs + h)) - np.asarray(f(xs - h))) / (2.0 * h)
    left = xs < h
    if np.any(left):
        d = np.where(left, (np.asarray(f(xs + h)) - np.asarray(f(xs))) / h, d)
    return d


def validate_model(
    m: DiffusionModel, x_max: float = DEFAULT_X_MAX, n_grid: int = DEFAULT_N_GRID
) -> ValidationReport:
    """Check assumptions A.1-A.5 on the uniform grid {0, ..., x_max}."""
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    xs = np.linspace(0.0, x_max, n_grid)
    h = x_max / (10.0 * n_grid)
    checks: dict[str, AssumptionCheck] = {}

    with np.errstate(all="ignore"):
        mu_v = np.asarray(m.mu(xs), dtype=float)
        sg_v = np.asarray(m.sigma(xs), dtype=float)
        mu_p = _fd_derivative(m.mu, xs, h)
        sg_p = _fd_derivative(m.sigma, xs, h)

    # A.1: evaluability plus bounded difference quotients of the
    # coefficients and of their first differences (Lipschitz proxy).
    vals = np.concatenate([mu_v, sg_v, mu_p, sg_p])
    if not np.all(np.isfinite(vals)):
        bad = xs[~np.isfinite(mu_v + sg_v + mu_p + sg_p)]
        worst = float(bad[0]) if bad.size else None
        checks["A.1"] = AssumptionCheck(
            "A.1", False, worst, None, "non-finite coefficient or derivative"
        )
    else:
        dx = xs[1] - xs[0]
        quot = max(
            float(np.max(np.abs(np.diff(mu_p)))) / dx,
            float(np.max(np.abs(np.diff(sg_p)))) / dx,
        )
        checks["A.1"] = AssumptionCheck(
            "A.1", np.isfinite(quot), None, quot, "max difference quotient of mu',sigma'"
        )

    a1_ok = checks["A.1"].passed

    # A.2: sigma^2 strictly positive
    s2 = sg_v * sg_v
    if a1_ok:
        i = int(np.argmin(s2))
        checks["A.2"] = AssumptionCheck(
            "A.2", bool(s2[i] > 0.0), float(xs[i]), float(s2[i]), "min sigma^2"
        )
    else:
        checks["A.2"] = AssumptionCheck("A.2", False, None, None, "not evaluable")

    # A.3: mu' < r everywhere on the grid
    if a1_ok:
        i = int(np.argmax(mu_p))
        checks["A.3"] = AssumptionCheck(
            "A.3", bool(mu_p[i] < m.r), float(xs[i]), float(mu_p[i]), f"max mu' vs r={m.r}"
        )
        # A.4: uniform margin below r
        eps0 = 1e-6 * m.r
        checks["A.4"] = AssumptionCheck(
            "A.4",
            bool(mu_p[i] <= m.r - eps0),
            float(xs[i]),
            float(mu_p[i]),
            f"max mu' vs r-eps0={m.r - eps0}",
        )
    else:
        checks["A.3"] = AssumptionCheck("A.3", False, None, None, "not evaluable")
        checks["A.4"] = AssumptionCheck("A.4", False, None, None, "not evaluable")

    # A.5: mu(0) > 0
    mu0 = float(mu_v[0])
    checks["A.5"] = AssumptionCheck(
        "A.5", bool(np.isfinite(mu0) and mu0 > 0.0), 0.0, mu0, "mu(0)"
    )

    return ValidationReport(checks=checks, x_max=x_max, n_grid=n_grid, fd_step=h)


def require_valid(
    m: DiffusionModel, x_max: float = DEFAULT_X_MAX, n_grid: int = DEFAULT_N_GRID
) -> ValidationReport:
    """Validate and raise ModelValidationError on any failed assumption."""
    report = validate_model(m, x_max, n_grid)
    if not report.passed:
        raise ModelValidationError(report)
    return report
