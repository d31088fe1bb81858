"""Cost-fidelity laws C(theta) = c_min + G(theta) and fusion costs D(N).

Every form is a frozen dataclass with ``value`` / ``deriv`` methods; the
module-level functions (``eval_cost``, ``eval_incremental_deriv``, ...) add
domain checks on top and are what the rest of the package calls.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from typing import Any, ClassVar, Union

import numpy as np

from repfusion.errors import ConfigError, DomainError, ExtrapolationError

_EXP_MAX = 709.78  # math.exp overflows just above this


def _exp(u: float) -> float:
    return math.inf if u > _EXP_MAX else math.exp(u)


def _check_positive(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
    return value


def _check_nonnegative(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ConfigError(f"{name} must be finite and >= 0, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Incremental cost forms G(theta)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """G(theta) = alpha * (exp(beta * theta) - 1)."""

    alpha: float
    beta: float
    kind: ClassVar[str] = "exponential"
    has_analytic_derivatives: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _check_positive("beta", self.beta))

    def value(self, theta: float) -> float:
        u = self.beta * theta
        if u > _EXP_MAX:
            return math.inf
        return self.alpha * math.expm1(u)

    def deriv(self, theta: float, order: int) -> float:
        return self.alpha * self.beta**order * _exp(self.beta * theta)

    def tangent_gap(self, x: float) -> float:
        """x * G'(x) - G(x), evaluated without cancellation for small x."""
        u = self.beta * x
        if u < 0.5:
            # sum_{k>=2} (k - 1) u^k / k!
            total, term, k = 0.0, u, 1
            while True:
                k += 1
                term *= u / k
                inc = (k - 1) * term
                total += inc
                if inc <= 1e-18 * total or k > 60:
                    break
            return self.alpha * total
        e = _exp(u)
        if math.isinf(e):
            return math.inf
        return self.alpha * ((u - 1.0) * e + 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Power:
    """G(theta) = alpha * theta**p; convex for p >= 1, concave for p <= 1."""

    alpha: float
    p: float
    kind: ClassVar[str] = "power"
    has_analytic_derivatives: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))
        object.__setattr__(self, "p", _check_positive("p", self.p))

    def value(self, theta: float) -> float:
        try:
            return self.alpha * theta**self.p
        except OverflowError:
            return math.inf

    def deriv(self, theta: float, order: int) -> float:
        p = self.p
        if order == 1:
            return self.alpha * p * theta ** (p - 1.0)
        if p == 1.0:
            return 0.0
        return self.alpha * p * (p - 1.0) * theta ** (p - 2.0)

    def tangent_gap(self, x: float) -> float:
        if self.p == 1.0:
            return 0.0
        return (self.p - 1.0) * self.value(x)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "p": self.p}


@dataclass(frozen=True)
class Linear:
    alpha: float
    kind: ClassVar[str] = "linear"
    has_analytic_derivatives: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))

    def value(self, theta: float) -> float:
        return self.alpha * theta

    def deriv(self, theta: float, order: int) -> float:
        return self.alpha if order == 1 else 0.0

    def tangent_gap(self, x: float) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class LogConcave:
    """G(theta) = alpha * log(1 + beta * theta)."""

    alpha: float
    beta: float
    kind: ClassVar[str] = "log_concave"
    has_analytic_derivatives: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _check_positive("beta", self.beta))

    def value(self, theta: float) -> float:
        return self.alpha * math.log1p(self.beta * theta)

    def deriv(self, theta: float, order: int) -> float:
        q = 1.0 + self.beta * theta
        if order == 1:
            return self.alpha * self.beta / q
        return -self.alpha * self.beta**2 / (q * q)

    def tangent_gap(self, x: float) -> float:
        u = self.beta * x
        return self.alpha * (u / (1.0 + u) - math.log1p(u))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Tabulated:
    """Monotone piecewise-linear curve through user-supplied (theta, G) knots.

    The first knot must be (0, 0) and both coordinates strictly increase.
    Evaluating past the last knot raises ``ExtrapolationError``.
    """

    knots: tuple
    kind: ClassVar[str] = "tabulated"
    has_analytic_derivatives: ClassVar[bool] = False

    def __post_init__(self):
        try:
            pts = tuple((float(t), float(g)) for t, g in self.knots)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"knots must be a list of [theta, G] pairs: {exc}") from None
        if len(pts) < 2:
            raise ConfigError("tabulated curve needs at least two knots")
        if pts[0] != (0.0, 0.0):
            raise ConfigError(f"first knot must be (0, 0), got {pts[0]}")
        for (t0, g0), (t1, g1) in zip(pts, pts[1:]):
            if not (t1 > t0 and g1 > g0) or not (math.isfinite(t1) and math.isfinite(g1)):
                raise ConfigError("knots must be finite and strictly increasing in both coordinates")
        object.__setattr__(self, "knots", pts)
        object.__setattr__(self, "_xs", tuple(t for t, _ in pts))

    @property
    def theta_max(self) -> float:
        return self.knots[-1][0]

    def value(self, theta: float) -> float:
        xs = self._xs
        if theta > xs[-1]:
            raise ExtrapolationError(
                f"theta={theta!r} beyond last tabulated knot {xs[-1]!r}"
            )
        i = bisect.bisect_right(xs, theta)
        if i >= len(xs):
            return self.knots[-1][1]
        (t0, g0), (t1, g1) = self.knots[i - 1], self.knots[i]
        return g0 + (g1 - g0) * (theta - t0) / (t1 - t0)

    def deriv(self, theta: float, order: int) -> float:
        if order != 1:
            raise DomainError("tabulated curves only support first derivatives")
        h = max(1e-6, 1e-6 * theta)
        lo = max(theta - h, 0.0)
        hi = min(theta + h, self.theta_max)
        return (self.value(hi) - self.value(lo)) / (hi - lo)

    def tangent_gap(self, x: float) -> float:
        return x * self.deriv(x, 1) - self.value(x)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "knots": [list(k) for k in self.knots]}


IncrementalCostForm = Union[Exponential, Power, Linear, LogConcave, Tabulated]


@dataclass(frozen=True)
class CostSpec:
    c_min: float
    incremental: IncrementalCostForm

    def __post_init__(self):
        object.__setattr__(self, "c_min", _check_nonnegative("c_min", self.c_min))

    def to_dict(self) -> dict:
        return {"c_min": self.c_min, "incremental": self.incremental.to_dict()}


# ---------------------------------------------------------------------------
# Fusion cost forms D(N) and their continuous relaxation D(a)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearMinusOne:
    """D(a) = gamma * (a - 1)."""

    gamma: float
    kind: ClassVar[str] = "linear_minus_one"

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_nonnegative("gamma", self.gamma))

    def value(self, a: float) -> float:
        return self.gamma * (a - 1.0)

    def deriv(self, a: float, order: int) -> float:
        return self.gamma if order == 1 else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}


@dataclass(frozen=True)
class Polynomial:
    """D(a) = sum_j coeffs[j-1] * (a - 1)**j, j = 1..len(coeffs)."""

    coeffs: tuple
    kind: ClassVar[str] = "polynomial"

    def __post_init__(self):
        if isinstance(self.coeffs, (str, bytes)) or not hasattr(self.coeffs, "__iter__"):
            raise ConfigError("coeffs must be a list of numbers")
        cs = tuple(_check_nonnegative(f"coeffs[{j}]", c) for j, c in enumerate(self.coeffs))
        if not cs or not any(c > 0.0 for c in cs):
            raise ConfigError("polynomial fusion cost needs at least one positive coefficient")
        object.__setattr__(self, "coeffs", cs)

    def value(self, a: float) -> float:
        s = a - 1.0
        return math.fsum(c * s ** (j + 1) for j, c in enumerate(self.coeffs))

    def deriv(self, a: float, order: int) -> float:
        s = a - 1.0
        if order == 1:
            return math.fsum((j + 1) * c * s**j for j, c in enumerate(self.coeffs))
        return math.fsum(
            (j + 1) * j * c * s ** (j - 1) for j, c in enumerate(self.coeffs) if j >= 1
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Affine:
    """D(a) = d0 + d1 * a."""

    d0: float
    d1: float
    kind: ClassVar[str] = "affine"

    def __post_init__(self):
        object.__setattr__(self, "d0", _check_nonnegative("d0", self.d0))
        object.__setattr__(self, "d1", _check_positive("d1", self.d1))

    def value(self, a: float) -> float:
        return self.d0 + self.d1 * a

    def deriv(self, a: float, order: int) -> float:
        return self.d1 if order == 1 else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d0": self.d0, "d1": self.d1}


FusionCostSpec = Union[LinearMinusOne, Polynomial, Affine]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _check_order(order: int) -> None:
    if order not in (1, 2):
        raise DomainError(f"derivative order must be 1 or 2, got {order!r}")


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not theta > 0.0:
        raise DomainError(f"fidelity must be > 0, got {theta!r}")
    return theta


def eval_incremental(spec: CostSpec, theta: float) -> float:
    """G(theta) alone, without the baseline."""
    return spec.incremental.value(_check_theta(theta))


def eval_cost(spec: CostSpec, theta: float) -> float:
    return spec.c_min + spec.incremental.value(_check_theta(theta))


def eval_incremental_deriv(spec: CostSpec, theta: float, order: int) -> float:
    _check_order(order)
    theta = _check_theta(theta)
    if order == 2 and not spec.incremental.has_analytic_derivatives:
        raise DomainError("second derivative is not available for tabulated curves")
    return spec.incremental.deriv(theta, order)


def _check_a(a: float) -> float:
    a = float(a)
    if not a >= 1.0:
        raise DomainError(f"fusion cost relaxation is defined for a >= 1, got {a!r}")
    return a


def eval_fusion_cost(spec: FusionCostSpec, a: float) -> float:
    return spec.value(_check_a(a))


def eval_fusion_deriv(spec: FusionCostSpec, a: float, order: int) -> float:
    _check_order(order)
    return spec.deriv(_check_a(a), order)


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


class Curvature(enum.Enum):
    CONVEX = "convex"
    LINEAR = "linear"
    CONCAVE = "concave"
    INDETERMINATE = "indeterminate"


CURVATURE_GRID_POINTS = 64


def default_probe_range(spec: CostSpec) -> tuple[float, float]:
    """Probe range used by the planner when none is given."""
    if isinstance(spec.incremental, Tabulated):
        hi = spec.incremental.theta_max
        return hi * 1e-3, hi
    return 1e-2, 1e2


def classify_curvature(spec: CostSpec, probe_range: tuple[float, float] | None = None) -> Curvature:
    """Classify G on a 64-point geometric grid over ``probe_range``.

    Closed forms use their analytic second derivative, and report LINEAR only
    when it is exactly zero everywhere on the grid. Tabulated curves fall back
    to divided second differences, where LINEAR means "within tolerance".
    The tolerance is 1e-9 times the largest finite |G| on the grid.
    """
    if probe_range is None:
        probe_range = default_probe_range(spec)
    lo, hi = (float(v) for v in probe_range)
    if not (0.0 < lo < hi):
        raise DomainError(f"probe range must satisfy 0 < lo < hi, got {probe_range!r}")
    form = spec.incremental
    grid = np.geomspace(lo, hi, CURVATURE_GRID_POINTS)
    g_vals = np.array([form.value(t) for t in grid])
    finite = g_vals[np.isfinite(g_vals)]
    tol = 1e-9 * float(np.max(np.abs(finite))) if finite.size else 0.0

    if form.has_analytic_derivatives:
        curv = np.array([form.deriv(t, 2) for t in grid])
        if np.all(curv == 0.0):
            return Curvature.LINEAR
    else:
        x0, x1, x2 = grid[:-2], grid[1:-1], grid[2:]
        g0, g1, g2 = g_vals[:-2], g_vals[1:-1], g_vals[2:]
        curv = 2.0 * ((g2 - g1) / (x2 - x1) - (g1 - g0) / (x1 - x0)) / (x2 - x0)
        if np.all(np.abs(curv) <= tol):
            return Curvature.LINEAR
    if np.all(curv >= -tol):
        return Curvature.CONVEX
    if np.all(curv <= tol):
        return Curvature.CONCAVE
    return Curvature.INDETERMINATE


# ---------------------------------------------------------------------------
# JSON construction
# ---------------------------------------------------------------------------

_INCREMENTAL_KINDS = {
    "exponential": (Exponential, ("alpha", "beta")),
    "power": (Power, ("alpha", "p")),
    "linear": (Linear, ("alpha",)),
    "log_concave": (LogConcave, ("alpha", "beta")),
    "tabulated": (Tabulated, ("knots",)),
}

_FUSION_KINDS = {
    "linear_minus_one": (LinearMinusOne, ("gamma",)),
    "polynomial": (Polynomial, ("coeffs",)),
    "affine": (Affine, ("d0", "d1")),
}


def _exact_fields(obj: Any, required: tuple, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - set(required)
    missing = set(required) - set(obj)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")


def _tagged(obj: Any, table: dict, where: str):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where} must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind not in table:
        raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {sorted(table)}")
    cls, fields = table[kind]
    _exact_fields(obj, ("kind",) + fields, f"{where} ({kind})")
    return cls(**{f: obj[f] for f in fields})


def incremental_from_dict(obj: Any) -> IncrementalCostForm:
    return _tagged(obj, _INCREMENTAL_KINDS, "incremental")


def cost_spec_from_dict(obj: Any) -> CostSpec:
    _exact_fields(obj, ("c_min", "incremental"), "cost")
    return CostSpec(obj["c_min"], incremental_from_dict(obj["incremental"]))


def fusion_spec_from_dict(obj: Any) -> FusionCostSpec:
    return _tagged(obj, _FUSION_KINDS, "fusion")
