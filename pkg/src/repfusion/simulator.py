"""Seeded Monte Carlo validation of fused estimates.

Trials are processed in fixed blocks of ``BLOCK_TRIALS``. Block ``b`` draws
from its own PCG64 stream keyed by ``SeedSequence(seed, spawn_key=(b,))`` in
(trial, unit) row-major order, and block partials are merged in block order.
The report therefore depends only on (config, seed), never on ``workers``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from repfusion.errors import ConfigError, DomainError
from repfusion.fusion_core import as_fidelities, general_mse, optimal_weights

BLOCK_TRIALS = 1 << 16
DEFAULT_TRIALS = 10**6
UNBIASED_TOL = 1e-12


class PerturbationKind(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    RADEMACHER = "rademacher"


@dataclass(frozen=True)
class SimulationConfig:
    kind: PerturbationKind
    theta: tuple
    weights: tuple
    y_value: float = 1.0
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    epsilons: tuple = ()

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, PerturbationKind):
            try:
                kind = PerturbationKind(kind)
            except ValueError:
                raise ConfigError(f"unknown perturbation kind {kind!r}") from None
        object.__setattr__(self, "kind", kind)
        th = as_fidelities(self.theta)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != th.shape:
            raise DomainError(f"weights ({w.size}) and fidelities ({th.size}) differ in length")
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        object.__setattr__(self, "theta", tuple(th.tolist()))
        object.__setattr__(self, "weights", tuple(w.tolist()))
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        object.__setattr__(self, "trials", int(self.trials))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if not math.isfinite(self.y_value):
            raise DomainError("y_value must be finite")
        object.__setattr__(self, "y_value", float(self.y_value))
        eps = tuple(float(e) for e in self.epsilons)
        if any(not e > 0.0 for e in eps):
            raise DomainError(f"tail thresholds must be > 0, got {list(eps)}")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def with_optimal_weights(cls, kind, theta, **kwargs) -> "SimulationConfig":
        w, _ = optimal_weights(theta)
        return cls(kind=kind, theta=tuple(theta), weights=tuple(w.tolist()), **kwargs)

    @classmethod
    def from_dict(cls, obj: Any) -> "SimulationConfig":
        allowed = {"kind", "theta", "weights", "y_value", "trials", "seed", "epsilons"}
        if not isinstance(obj, dict):
            raise ConfigError("simulation config must be a JSON object")
        unknown = set(obj) - allowed
        if unknown:
            raise ConfigError(f"simulation config: unknown field(s) {sorted(unknown)}")
        for req in ("kind", "theta"):
            if req not in obj:
                raise ConfigError(f"simulation config: missing field {req!r}")
        for name in ("trials", "seed"):
            if name in obj and (isinstance(obj[name], bool) or not isinstance(obj[name], int)):
                raise ConfigError(f"simulation config: {name} must be an integer")
        for name in ("theta", "weights", "epsilons"):
            if name in obj and not (
                isinstance(obj[name], list)
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj[name])
            ):
                raise ConfigError(f"simulation config: {name} must be a list of numbers")
        kwargs = {k: obj[k] for k in ("y_value", "trials", "seed") if k in obj}
        kwargs["epsilons"] = tuple(obj.get("epsilons", ()))
        if obj.get("weights") is None:
            return cls.with_optimal_weights(obj["kind"], obj["theta"], **kwargs)
        return cls(kind=obj["kind"], theta=tuple(obj["theta"]), weights=tuple(obj["weights"]), **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        for k in ("theta", "weights", "epsilons"):
            d[k] = list(d[k])
        return d


@dataclass(frozen=True)
class TailEstimate:
    epsilon: float
    empirical_prob: float
    binomial_std_err: float
    chebyshev_bound: float
    subgaussian_bound: float


@dataclass(frozen=True)
class SimulationReport:
    empirical_mse: float
    mse_std_err: float
    analytic_mse: float
    tail_estimates: tuple = field(default_factory=tuple)
    seed: int = 0
    trials: int = 0
    kind: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail_estimates"] = [asdict(t) for t in self.tail_estimates]
        return d


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw_block(kind: PerturbationKind, theta: np.ndarray, seed: int, block: int, m: int) -> np.ndarray:
    rng = _block_rng(seed, block)
    shape = (m, theta.size)
    if kind is PerturbationKind.GAUSSIAN:
        return rng.standard_normal(shape) / np.sqrt(theta)
    if kind is PerturbationKind.UNIFORM:
        return rng.uniform(-1.0, 1.0, shape) * np.sqrt(3.0 / theta)
    signs = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    return signs / np.sqrt(theta)


def _blocks(trials: int) -> list[tuple[int, int]]:
    n_blocks = -(-trials // BLOCK_TRIALS)
    return [(b, min(BLOCK_TRIALS, trials - b * BLOCK_TRIALS)) for b in range(n_blocks)]


def draw_perturbations(kind, theta: Sequence[float], trials: int, seed: int) -> np.ndarray:
    """The (trials, N) perturbation matrix used by ``run_fusion_trials``."""
    kind = PerturbationKind(kind)
    th = as_fidelities(theta)
    return np.vstack([_draw_block(kind, th, seed, b, m) for b, m in _blocks(trials)])


# ---------------------------------------------------------------------------
# Fusion trials
# ---------------------------------------------------------------------------


def _run_block(cfg: SimulationConfig, theta: np.ndarray, w: np.ndarray, block: int, m: int):
    u = _draw_block(cfg.kind, theta, cfg.seed, block, m)
    y = cfg.y_value
    err = (y + u) @ w - y
    sq = err * err
    mean = float(np.mean(sq))
    m2 = float(np.sum((sq - mean) ** 2))
    abs_err = np.abs(err)
    exceed = tuple(int(np.count_nonzero(abs_err >= e)) for e in cfg.epsilons)
    return m, mean, m2, exceed


def _bounds(cfg: SimulationConfig, eps: float, analytic_mse: float) -> tuple[float, float]:
    th = np.asarray(cfg.theta)
    w = np.asarray(cfg.weights)
    chebyshev = min(1.0, analytic_mse / (eps * eps))
    bias_factor = math.fsum(w) - 1.0
    bias = 0.0 if abs(bias_factor) <= UNBIASED_TOL else abs(cfg.y_value * bias_factor)
    proxy = math.fsum(w * w / th)
    if proxy == 0.0:
        subgauss = 0.0 if eps > bias else 2.0
    elif eps <= bias:
        subgauss = 2.0
    else:
        subgauss = 2.0 * math.exp(-((eps - bias) ** 2) / (2.0 * proxy))
    return chebyshev, subgauss


def run_fusion_trials(cfg: SimulationConfig, workers: int = 1) -> SimulationReport:
    """Simulate ``cfg.trials`` fused estimates and summarize their error.

    ``workers > 1`` spreads blocks over threads; the report is unchanged.
    """
    theta = np.asarray(cfg.theta)
    w = np.asarray(cfg.weights)
    blocks = _blocks(cfg.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bm: _run_block(cfg, theta, w, *bm), blocks))
    else:
        parts = [_run_block(cfg, theta, w, b, m) for b, m in blocks]

    # Chan et al. pairwise merge, always in block order
    n_tot, mean, m2 = 0, 0.0, 0.0
    exceed = [0] * len(cfg.epsilons)
    for m, bmean, bm2, bexceed in parts:
        delta = bmean - mean
        n_new = n_tot + m
        mean += delta * m / n_new
        m2 += bm2 + delta * delta * n_tot * m / n_new
        n_tot = n_new
        exceed = [a + b for a, b in zip(exceed, bexceed)]

    n = cfg.trials
    std_err = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    analytic = general_mse(w, theta, cfg.y_value**2)
    tails = []
    for eps, count in zip(cfg.epsilons, exceed):
        p = count / n
        cheb, sub = _bounds(cfg, eps, analytic)
        tails.append(
            TailEstimate(
                epsilon=eps,
                empirical_prob=p,
                binomial_std_err=math.sqrt(p * (1.0 - p) / n),
                chebyshev_bound=cheb,
                subgaussian_bound=sub,
            )
        )
    return SimulationReport(
        empirical_mse=mean,
        mse_std_err=std_err,
        analytic_mse=analytic,
        tail_estimates=tuple(tails),
        seed=cfg.seed,
        trials=n,
        kind=cfg.kind.value,
    )


def estimate_tail(cfg: SimulationConfig, epsilons: Sequence[float], workers: int = 1) -> tuple:
    if len(epsilons) == 0:
        raise DomainError("at least one tail threshold is required")
    return run_fusion_trials(replace(cfg, epsilons=tuple(epsilons)), workers=workers).tail_estimates
