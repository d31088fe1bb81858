"""Inverse-variance fusion of unreliable outcomes and the total-cost function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from repfusion.cost_model import CostSpec, FusionCostSpec, eval_cost, eval_fusion_cost
from repfusion.errors import DomainError

MAX_UNITS = 10**6


def as_fidelities(theta: Sequence[float]) -> np.ndarray:
    """Validate and copy a fidelity vector (all entries finite and > 0)."""
    arr = np.array(theta, dtype=float).reshape(-1)
    if arr.size == 0:
        raise DomainError("fidelity vector must contain at least one unit")
    if not np.all(arr > 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"fidelities must be finite and > 0, got {arr.tolist()}")
    return arr


@dataclass(frozen=True)
class StrategyEvaluation:
    weights: tuple
    mse: float
    total_cost: float
    n: int


def optimal_weights(theta: Sequence[float]) -> tuple[np.ndarray, float]:
    """MMSE weights ``theta / sum(theta)`` and the resulting MSE ``1 / sum(theta)``.

    The weights are renormalized once after the division so that their sum is
    1 to within a few ulps regardless of N.
    """
    th = as_fidelities(theta)
    total = math.fsum(th)
    w = th / total
    w = w / math.fsum(w)
    return w, 1.0 / total


def general_mse(w: Sequence[float], theta: Sequence[float], second_moment_y: float) -> float:
    """E[Y^2] (sum(w) - 1)^2 + sum(w_i^2 / theta_i) for uncorrelated perturbations."""
    w = np.asarray(w, dtype=float).reshape(-1)
    th = as_fidelities(theta)
    if w.shape != th.shape:
        raise DomainError(f"weights ({w.size}) and fidelities ({th.size}) differ in length")
    if second_moment_y < 0.0:
        raise DomainError("second moment of Y must be >= 0")
    bias = math.fsum(w) - 1.0
    return second_moment_y * bias * bias + math.fsum(w * w / th)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau > 0.0 and math.isfinite(tau)):
        raise DomainError(f"target MSE tau must be finite and > 0, got {tau!r}")
    return tau


def _check_n(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"number of units must be a positive integer, got {n!r}")
    n = int(n)
    if n > MAX_UNITS:
        raise DomainError(f"number of units {n} exceeds the cap of {MAX_UNITS}")
    return n


def uniform_fidelities(tau: float, n: int) -> np.ndarray:
    tau, n = _check_tau(tau), _check_n(n)
    return np.full(n, 1.0 / (tau * n))


def total_cost(cost: CostSpec, fusion: FusionCostSpec, tau: float, n: int) -> float:
    """N * G(1/(tau N)) + N * c_min + D(N) under the uniform allocation."""
    tau, n = _check_tau(tau), _check_n(n)
    return relaxed_total_cost(cost, fusion, tau, float(n))


def relaxed_total_cost(cost: CostSpec, fusion: FusionCostSpec, tau: float, a: float) -> float:
    """Continuous relaxation of ``total_cost`` for real a >= 1."""
    tau = _check_tau(tau)
    theta = 1.0 / (tau * a)
    return a * cost.incremental.value(theta) + a * cost.c_min + eval_fusion_cost(fusion, a)


def evaluate_strategy(
    cost: CostSpec, fusion: FusionCostSpec, theta: Sequence[float]
) -> StrategyEvaluation:
    """Optimal weights, MSE, and incurred cost for an arbitrary fidelity vector."""
    th = as_fidelities(theta)
    w, mse = optimal_weights(th)
    spent = math.fsum(eval_cost(cost, t) for t in th) + eval_fusion_cost(fusion, th.size)
    return StrategyEvaluation(weights=tuple(w.tolist()), mse=mse, total_cost=spent, n=int(th.size))
