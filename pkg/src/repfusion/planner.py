"""Cost-optimal repetition planning.

For convex incremental costs the total cost relaxed to real a >= 1 is convex,
so its slope is monotone and both the continuous minimizer a_o(tau) and the
threshold T are found by bisection. Linear and concave costs never benefit
from fusing more than one unit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from repfusion.cost_model import (
    CostSpec,
    Curvature,
    FusionCostSpec,
    classify_curvature,
)
from repfusion.errors import DivergenceError, DomainError, UnsupportedRegimeError
from repfusion.fusion_core import (
    optimal_weights,
    total_cost,
    uniform_fidelities,
)

A_MAX = 2.0**60
TAU_PROBE = 1e-8
UNBOUNDED_V = 1e15
TAU_REL_TOL = 1e-10
TAU_HI_MAX = 2.0**200


class RegimeKind(enum.Enum):
    CONVEX_THRESHOLDED = "convex_thresholded"
    CONVEX_ALWAYS_SINGLE = "convex_always_single"
    LINEAR_ALWAYS_SINGLE = "linear_always_single"
    CONCAVE_ALWAYS_SINGLE = "concave_always_single"


@dataclass(frozen=True)
class Regime:
    """Regime of a (cost, fusion) pair.

    ``threshold`` is T for CONVEX_THRESHOLDED (``math.inf`` when fusion pays
    at every tau). ``limit`` is lim_{tau->0} V(tau) on the convex path,
    ``math.inf`` when V is unbounded. ``cutoff`` is c_min + D'(1).
    """

    kind: RegimeKind
    cutoff: float
    threshold: float | None = None
    limit: float | None = None

    @property
    def always_single(self) -> bool:
        return self.kind is not RegimeKind.CONVEX_THRESHOLDED


@dataclass(frozen=True)
class Diagnostics:
    a_o: float
    v_tau: float | None
    kappa_at_1: float
    cutoff: float
    threshold: float | None = None
    limit: float | None = None


@dataclass(frozen=True)
class StrategyPlan:
    n_o: int
    per_unit_fidelity: float
    weights: tuple
    total_cost: float
    achieved_mse: float
    regime: Regime
    diagnostics: Diagnostics
    tau: float = field(default=math.nan)

    def to_dict(self) -> dict:
        d = self.diagnostics
        return {
            "n_o": self.n_o,
            "per_unit_fidelity": self.per_unit_fidelity,
            "weights": list(self.weights),
            "total_cost": self.total_cost,
            "achieved_mse": self.achieved_mse,
            "regime": self.regime.kind.value,
            "diagnostics": {
                "a_o": d.a_o,
                "v_tau": d.v_tau,
                "kappa_at_1": d.kappa_at_1,
                "cutoff": d.cutoff,
                "threshold": _json_extended(d.threshold),
                "limit": _json_extended(d.limit),
            },
        }


def _json_extended(x: float | None):
    if x is None:
        return None
    return "unbounded" if math.isinf(x) else x


def cutoff_value(cost: CostSpec, fusion: FusionCostSpec) -> float:
    """c_min + D'(1), the right-hand side of the single-vs-fused comparison."""
    return cost.c_min + fusion.deriv(1.0, 1)


def _require_convex_path(cost: CostSpec) -> None:
    if not cost.incremental.has_analytic_derivatives:
        raise UnsupportedRegimeError(
            "cost slope and V(tau) need an analytic incremental form; tabulated curves are not supported"
        )
    curv = classify_curvature(cost)
    if curv in (Curvature.CONCAVE, Curvature.INDETERMINATE):
        raise UnsupportedRegimeError(
            f"cost slope and V(tau) apply to convex or linear costs, got {curv.value}"
        )


def _slope(cost: CostSpec, fusion: FusionCostSpec, tau: float, a: float) -> float:
    return (cost.c_min + fusion.deriv(a, 1)) - cost.incremental.tangent_gap(1.0 / (tau * a))


def _v(cost: CostSpec, tau: float) -> float:
    return cost.incremental.tangent_gap(1.0 / tau)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau > 0.0 and math.isfinite(tau)):
        raise DomainError(f"target MSE tau must be finite and > 0, got {tau!r}")
    return tau


def cost_slope(cost: CostSpec, fusion: FusionCostSpec, tau: float, a: float) -> float:
    """d/da of the relaxed total cost: G(x) - x G'(x) + c_min + D'(a), x = 1/(tau a)."""
    _require_convex_path(cost)
    tau = _check_tau(tau)
    if not a >= 1.0:
        raise DomainError(f"a must be >= 1, got {a!r}")
    return _slope(cost, fusion, tau, float(a))


def v_of_tau(cost: CostSpec, tau: float) -> float:
    """V(tau) = G'(1/tau) / tau - G(1/tau)."""
    _require_convex_path(cost)
    return _v(cost, _check_tau(tau))


def _solve_minimizer(cost: CostSpec, fusion: FusionCostSpec, tau: float) -> float:
    if _slope(cost, fusion, tau, 1.0) >= 0.0:
        return 1.0
    lo, hi = 1.0, 2.0
    while _slope(cost, fusion, tau, hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > A_MAX:
            raise DivergenceError(
                f"no sign change of the cost slope below a = 2^60 (tau={tau!r}); spec is malformed"
            )
    slope_tol = 1e-10 * (1.0 + abs(cutoff_value(cost, fusion)))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        k = _slope(cost, fusion, tau, mid)
        if abs(k) <= slope_tol:
            return mid
        if k < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def solve_continuous_minimizer(cost: CostSpec, fusion: FusionCostSpec, tau: float) -> float:
    _require_convex_path(cost)
    return _solve_minimizer(cost, fusion, _check_tau(tau))


def select_optimal_n(cost: CostSpec, fusion: FusionCostSpec, tau: float, a_o: float) -> int:
    """Cheaper of floor(a_o) and ceil(a_o); ties go to the smaller count."""
    if not a_o >= 1.0:
        raise DomainError(f"a_o must be >= 1, got {a_o!r}")
    lo = max(1, math.floor(a_o))
    hi = max(1, math.ceil(a_o))
    if lo == hi:
        return lo
    return lo if total_cost(cost, fusion, tau, lo) <= total_cost(cost, fusion, tau, hi) else hi


def _bisect_threshold(cost: CostSpec, cutoff: float) -> float:
    if cutoff <= 0.0:
        return math.inf
    lo, hi = TAU_PROBE, 1.0
    while _v(cost, hi) > cutoff:
        lo, hi = hi, 2.0 * hi
        if hi > TAU_HI_MAX:
            return math.inf
    # tau spans many decades, so bisect in log space
    while hi - lo > TAU_REL_TOL * hi:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if _v(cost, mid) <= cutoff:
            hi = mid
        else:
            lo = mid
    return hi


def threshold_tau(cost: CostSpec, fusion: FusionCostSpec) -> Regime:
    """Regime dispatch by curvature; on the convex path locate T by bisection."""
    cutoff = cutoff_value(cost, fusion)
    curv = classify_curvature(cost)
    if curv is Curvature.LINEAR:
        return Regime(RegimeKind.LINEAR_ALWAYS_SINGLE, cutoff)
    if curv is Curvature.CONCAVE:
        return Regime(RegimeKind.CONCAVE_ALWAYS_SINGLE, cutoff)
    if curv is Curvature.INDETERMINATE:
        raise UnsupportedRegimeError("incremental cost is neither convex nor concave on the probe range")
    _require_convex_path(cost)

    taus = 10.0 ** np.arange(-1.0, -9.0, -1.0)
    vs = [_v(cost, t) for t in taus]
    limit = vs[-1]
    if math.isinf(limit) or (limit > UNBOUNDED_V and limit > vs[-2]):
        limit = math.inf
    if limit <= cutoff:
        return Regime(RegimeKind.CONVEX_ALWAYS_SINGLE, cutoff, limit=limit)
    return Regime(
        RegimeKind.CONVEX_THRESHOLDED, cutoff, threshold=_bisect_threshold(cost, cutoff), limit=limit
    )


def plan(cost: CostSpec, fusion: FusionCostSpec, tau: float) -> StrategyPlan:
    tau = _check_tau(tau)
    regime = threshold_tau(cost, fusion)
    cutoff = regime.cutoff
    if regime.kind is RegimeKind.CONCAVE_ALWAYS_SINGLE:
        v_tau = None
        kappa1 = cutoff - cost.incremental.tangent_gap(1.0 / tau)
    else:
        v_tau = _v(cost, tau)
        kappa1 = cutoff - v_tau

    if regime.kind in (RegimeKind.LINEAR_ALWAYS_SINGLE, RegimeKind.CONCAVE_ALWAYS_SINGLE):
        a_o = 1.0
        n_o = 1
    else:
        a_o = _solve_minimizer(cost, fusion, tau)
        n_o = select_optimal_n(cost, fusion, tau, a_o)

    theta = uniform_fidelities(tau, n_o)
    w, mse = optimal_weights(theta)
    return StrategyPlan(
        n_o=n_o,
        per_unit_fidelity=float(theta[0]),
        weights=tuple(w.tolist()),
        total_cost=total_cost(cost, fusion, tau, n_o),
        achieved_mse=mse,
        regime=regime,
        diagnostics=Diagnostics(
            a_o=a_o,
            v_tau=v_tau,
            kappa_at_1=kappa1,
            cutoff=cutoff,
            threshold=regime.threshold,
            limit=regime.limit,
        ),
        tau=tau,
    )
