"""Brute-force verifiers for the analytic results.

Everything here is deliberately slow and simple. Cost curves are re-evaluated
from their parameters with local formulas (numpy for grids, mpmath for V), so
an error in ``cost_model``/``fusion_core``/``planner`` cannot leak into the
reference it is compared against.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from repfusion import cost_model as cm
from repfusion.errors import DomainError, UnsupportedRegimeError

MAX_WEIGHT_UNITS = 4
MAX_ALLOCATION_UNITS = 3


@dataclass(frozen=True)
class OracleVerdict:
    claim: str
    analytic_value: float
    brute_force_value: float
    max_abs_gap: float
    passed: bool
    skipped: str | None = None
    detail: str = ""

    def line(self) -> str:
        if self.skipped is not None:
            return f"SKIP {self.claim}: {self.skipped}"
        status = "PASS" if self.passed else "FAIL"
        text = (
            f"{status} {self.claim} analytic={self.analytic_value:.12g} "
            f"brute_force={self.brute_force_value:.12g} gap={self.max_abs_gap:.3g}"
        )
        return f"{text} ({self.detail})" if self.detail else text


# ---------------------------------------------------------------------------
# Local re-implementations of the cost curves
# ---------------------------------------------------------------------------


def incremental_values(form, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if isinstance(form, cm.Exponential):
        with np.errstate(over="ignore"):
            return form.alpha * (np.exp(form.beta * theta) - 1.0)
    if isinstance(form, cm.Power):
        return form.alpha * np.power(theta, form.p)
    if isinstance(form, cm.Linear):
        return form.alpha * theta
    if isinstance(form, cm.LogConcave):
        return form.alpha * np.log(1.0 + form.beta * theta)
    if isinstance(form, cm.Tabulated):
        xs = np.array([k[0] for k in form.knots])
        ys = np.array([k[1] for k in form.knots])
        if np.any(theta > xs[-1]):
            raise DomainError("allocation grid leaves the tabulated range")
        return np.interp(theta, xs, ys)
    raise TypeError(f"unknown incremental form {form!r}")


def _d_scalar(fusion, n: float) -> float:
    if isinstance(fusion, cm.LinearMinusOne):
        return fusion.gamma * n - fusion.gamma
    if isinstance(fusion, cm.Polynomial):
        s = n - 1
        acc = 0.0
        for j, c in enumerate(fusion.coeffs, start=1):
            acc += c * s**j
        return acc
    if isinstance(fusion, cm.Affine):
        return fusion.d0 + fusion.d1 * n
    raise TypeError(f"unknown fusion form {fusion!r}")


def _g_mp(form):
    if isinstance(form, cm.Exponential):
        a, b = mpmath.mpf(form.alpha), mpmath.mpf(form.beta)
        return lambda t: a * mpmath.expm1(b * t)
    if isinstance(form, cm.Power):
        a, p = mpmath.mpf(form.alpha), mpmath.mpf(form.p)
        return lambda t: a * mpmath.power(t, p)
    if isinstance(form, cm.Linear):
        a = mpmath.mpf(form.alpha)
        return lambda t: a * t
    if isinstance(form, cm.LogConcave):
        a, b = mpmath.mpf(form.alpha), mpmath.mpf(form.beta)
        return lambda t: a * mpmath.log1p(b * t)
    raise UnsupportedRegimeError(f"no high-precision evaluator for {type(form).__name__}")


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=16)
def _simplex_lattice(n: int, k: int) -> np.ndarray:
    """All nonnegative integer n-vectors summing to k (one row each)."""
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    # stars and bars: choose n-1 bar positions among k+n-1 slots
    bars = np.array(list(itertools.combinations(range(k + n - 1), n - 1)), dtype=np.int64)
    bars = bars.reshape(-1, n - 1)
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), k + n - 1)])
    return np.diff(edges, axis=1) - 1


def brute_force_weights(
    theta: Sequence[float], grid_step: float, second_moment_y: float = 1.0
) -> tuple[np.ndarray, float]:
    """Exhaustive search for the MSE-minimizing weights on the simplex grid."""
    th = np.asarray(theta, dtype=float).reshape(-1)
    n = th.size
    if n < 1 or n > MAX_WEIGHT_UNITS:
        raise DomainError(f"weight oracle supports 1..{MAX_WEIGHT_UNITS} units, got {n}")
    if not (0.0 < grid_step <= 0.05):
        raise DomainError(f"grid step must be in (0, 0.05], got {grid_step!r}")
    if np.any(th <= 0.0):
        raise DomainError("fidelities must be > 0")
    k = int(round(1.0 / grid_step))
    w = _simplex_lattice(n, k) / k
    bias = w.sum(axis=1) - 1.0
    mse = second_moment_y * bias**2 + (w * w / th).sum(axis=1)
    i = int(np.argmin(mse))
    return w[i].copy(), float(mse[i])


def _allocation_grid(n: int, grid_points: int) -> np.ndarray:
    """Interior simplex points with every coordinate a multiple of 1/(grid_points+1)."""
    m = grid_points + 1
    if n == 2:
        i = np.arange(1, m)
        return np.column_stack([i, m - i]) / m
    i, j = np.meshgrid(np.arange(1, m), np.arange(1, m), indexing="ij")
    keep = i + j < m
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, m - i - j]) / m


def brute_force_allocation(
    cost: cm.CostSpec, tau: float, n: int, grid_points: int = 199
) -> tuple[np.ndarray, float]:
    """Grid minimizer of sum C(theta_i) subject to sum theta_i = 1/tau.

    Among ties (equal to 1e-12 relative, which absorbs rounding in flat
    sums) the point closest to uniform is returned, so linear costs report
    the uniform allocation when it lies on the grid.
    """
    if n not in (2, 3):
        raise DomainError(f"allocation oracle supports 2 or 3 units, got {n}")
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    budget = 1.0 / tau
    thetas = _allocation_grid(n, grid_points) * budget
    sums = incremental_values(cost.incremental, thetas).sum(axis=1) + n * cost.c_min
    best = sums.min()
    ties = np.flatnonzero(sums <= best + 1e-12 * abs(best))
    dist = np.abs(thetas[ties] - budget / n).max(axis=1)
    i = int(ties[np.argmin(dist)])
    return thetas[i].copy(), float(sums[i])


def sweep_integer_n(
    cost: cm.CostSpec, fusion: cm.FusionCostSpec, tau: float, n_max: int
) -> tuple[int, list[tuple[int, float]]]:
    """Evaluate the uniform-allocation total cost for N = 1..n_max by direct summation."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    table = []
    best_n, best = 1, math.inf
    for n in range(1, n_max + 1):
        per_unit = float(incremental_values(cost.incremental, np.array([1.0 / (tau * n)]))[0]) + cost.c_min
        c = math.fsum([per_unit] * n) + _d_scalar(fusion, n)
        table.append((n, c))
        if c < best:
            best_n, best = n, c
    return best_n, table


def _v_mp(form):
    g = _g_mp(form)

    def v(tau):
        x = 1 / mpmath.mpf(tau)
        return x * mpmath.diff(g, x) - g(x)

    return v


def bisect_v_inverse(cost: cm.CostSpec, target: float, rel_tol: float = 1e-11) -> float:
    """Smallest tau with V(tau) <= target, by log-space bisection in 40-digit arithmetic."""
    if not target > 0.0:
        raise DomainError("target must be > 0")
    with mpmath.workdps(40):
        v = _v_mp(cost.incremental)
        tgt = mpmath.mpf(target)
        lo = mpmath.mpf("1e-8")
        if not v(lo) > tgt:
            raise DomainError(f"target {target!r} is outside the range of V")
        hi = mpmath.mpf(1)
        while v(hi) > tgt:
            lo, hi = hi, 2 * hi
            if hi > mpmath.mpf(2) ** 200:
                raise DomainError(f"V never falls to target {target!r}")
        for _ in range(400):
            mid = mpmath.sqrt(lo * hi)
            vm = v(mid)
            if abs(vm - tgt) <= rel_tol * tgt and hi - lo <= mpmath.mpf("1e-25") * hi:
                return float(mid)
            if vm <= tgt:
                hi = mid
            else:
                lo = mid
        return float(hi)


def subadditivity_gap(cost: cm.CostSpec, pairs: np.ndarray) -> float:
    """max over pairs of G(x+y) - G(x) - G(y); <= 0 means sub-additive."""
    x, y = pairs[:, 0], pairs[:, 1]
    g = functools.partial(incremental_values, cost.incremental)
    return float(np.max(g(x + y) - g(x) - g(y)))
