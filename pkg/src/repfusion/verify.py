"""Run every applicable oracle check for one (cost, fusion) model."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from repfusion import oracle
from repfusion.cost_model import CostSpec, FusionCostSpec, Tabulated
from repfusion.errors import DomainError, UnsupportedRegimeError
from repfusion.fusion_core import optimal_weights
from repfusion.oracle import OracleVerdict
from repfusion.planner import (
    RegimeKind,
    plan,
    solve_continuous_minimizer,
    threshold_tau,
    v_of_tau,
)

DEFAULT_TAUS = (2.0, 1.0, 0.5, 0.1, 0.05)
WEIGHT_GRID_STEP = 0.01
ALLOCATION_GRID_POINTS = 199


def _skip(claim: str, reason: str) -> OracleVerdict:
    return OracleVerdict(claim, math.nan, math.nan, math.nan, passed=True, skipped=reason)


def check_weights(rng: np.random.Generator, instances: int = 20) -> OracleVerdict:
    worst_w, worst_mse, ok = 0.0, 0.0, True
    last = (math.nan, math.nan)
    for _ in range(instances):
        n = int(rng.integers(1, oracle.MAX_WEIGHT_UNITS + 1))
        theta = np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))
        w_o, mmse = optimal_weights(theta)
        best_w, best = oracle.brute_force_weights(theta, WEIGHT_GRID_STEP)
        cell_slack = WEIGHT_GRID_STEP**2 * float(np.sum(1.0 / theta))
        dw = float(np.max(np.abs(best_w - w_o)))
        worst_w = max(worst_w, dw)
        worst_mse = max(worst_mse, abs(best - mmse))
        ok &= best >= mmse * (1 - 1e-12) and best <= mmse + cell_slack and dw <= WEIGHT_GRID_STEP + 1e-12
        last = (mmse, best)
    return OracleVerdict(
        "mmse_weights", last[0], last[1], worst_mse, ok,
        detail=f"{instances} random fidelity vectors, max weight gap {worst_w:.3g}",
    )


def check_allocation(cost: CostSpec, taus: Sequence[float], convex: bool) -> OracleVerdict:
    gap, ok = 0.0, True
    analytic = brute = math.nan
    checked = 0
    for tau in taus:
        budget = 1.0 / tau
        if isinstance(cost.incremental, Tabulated) and budget > cost.incremental.theta_max:
            continue
        for n in (2, 3):
            best_theta, best_sum = oracle.brute_force_allocation(cost, tau, n, ALLOCATION_GRID_POINTS)
            checked += 1
            if convex:
                cell = budget / (ALLOCATION_GRID_POINTS + 1)
                d = float(np.max(np.abs(best_theta - budget / n)))
                gap = max(gap, d)
                ok &= d <= cell * (1 + 1e-9)
                analytic, brute = budget / n, float(best_theta[0])
            else:
                single = cost.incremental.value(budget)
                spent = best_sum - n * cost.c_min
                gap = max(gap, max(0.0, single - spent))
                ok &= spent >= single * (1 - 1e-12)
                analytic, brute = single, spent
    if checked == 0:
        return _skip("allocation", "every target lies outside the tabulated range")
    if convex:
        return OracleVerdict("uniform_allocation", analytic, brute, gap, ok,
                             detail="grid minimizer within one cell of uniform")
    return OracleVerdict("allocation_vs_single", analytic, brute, gap, ok,
                         detail="no split allocation cheaper than one unit")


def check_integer_sweep(cost: CostSpec, fusion: FusionCostSpec, tau: float) -> OracleVerdict:
    p = plan(cost, fusion, tau)
    n_max = max(3 * p.n_o, 50)
    best_n, table = oracle.sweep_integer_n(cost, fusion, tau, n_max)
    best = table[best_n - 1][1]
    gap = p.total_cost - best
    ok = gap <= 1e-12 * max(1.0, abs(best))
    return OracleVerdict(
        f"integer_optimum[tau={tau:g}]", p.total_cost, best, abs(gap), ok,
        detail=f"planner N={p.n_o}, sweep N={best_n} over 1..{n_max}",
    )


def check_threshold(cost: CostSpec, regime) -> OracleVerdict:
    claim = "threshold_T"
    if regime.kind is not RegimeKind.CONVEX_THRESHOLDED:
        return _skip(claim, f"not applicable to regime {regime.kind.value}")
    if math.isinf(regime.threshold):
        return _skip(claim, "fusion pays at every target, T is unbounded")
    ref = oracle.bisect_v_inverse(cost, regime.cutoff)
    rel = abs(regime.threshold - ref) / ref
    return OracleVerdict(claim, regime.threshold, ref, abs(regime.threshold - ref), rel <= 1e-8,
                         detail=f"relative gap {rel:.3g}")


def check_single_vs_fused(cost: CostSpec, fusion: FusionCostSpec, regime) -> OracleVerdict:
    t = regime.threshold
    center = t if t is not None and math.isfinite(t) else 1.0
    taus = np.geomspace(center / 10.0, center * 10.0, 100)
    mismatches = 0
    for tau in taus:
        predicted = regime.cutoff < v_of_tau(cost, tau)
        mismatches += predicted != (solve_continuous_minimizer(cost, fusion, tau) > 1.0)
    return OracleVerdict("single_vs_fused_condition", 0.0, float(mismatches), float(mismatches),
                         mismatches == 0, detail="100 targets around T")


def check_subadditivity(cost: CostSpec, rng: np.random.Generator, pairs: int = 1000) -> OracleVerdict:
    form = cost.incremental
    top = form.theta_max / 2.0 if isinstance(form, Tabulated) else 10.0
    xy = rng.uniform(0.0, top, size=(pairs, 2))
    gap = oracle.subadditivity_gap(cost, xy)
    scale = float(np.max(np.abs(oracle.incremental_values(form, xy.sum(axis=1)))))
    return OracleVerdict("subadditivity", 0.0, gap, max(gap, 0.0), gap <= 1e-12 * max(scale, 1.0),
                         detail=f"{pairs} random pairs")


def verify_config(
    cost: CostSpec, fusion: FusionCostSpec, taus: Sequence[float] = DEFAULT_TAUS, seed: int = 0
) -> list[OracleVerdict]:
    rng = np.random.default_rng(seed)
    verdicts = [check_weights(rng)]
    try:
        regime = threshold_tau(cost, fusion)
    except UnsupportedRegimeError as exc:
        verdicts.append(_skip("regime", str(exc)))
        return verdicts
    convex = regime.kind in (RegimeKind.CONVEX_THRESHOLDED, RegimeKind.CONVEX_ALWAYS_SINGLE)
    try:
        verdicts.append(check_allocation(cost, taus, convex))
    except DomainError as exc:
        verdicts.append(_skip("allocation", str(exc)))
    for tau in taus:
        try:
            verdicts.append(check_integer_sweep(cost, fusion, tau))
        except DomainError as exc:
            verdicts.append(_skip(f"integer_optimum[tau={tau:g}]", str(exc)))
    if convex:
        verdicts.append(check_threshold(cost, regime))
        verdicts.append(check_single_vs_fused(cost, fusion, regime))
    else:
        verdicts.append(_skip("threshold_T", f"V-inverse oracle only applies to convex costs ({regime.kind.value})"))
        if regime.kind is RegimeKind.CONCAVE_ALWAYS_SINGLE:
            verdicts.append(check_subadditivity(cost, rng))
    return verdicts
