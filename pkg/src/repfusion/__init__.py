"""Cost-optimal repetition and inverse-variance fusion of unreliable computations."""

from repfusion.cost_model import (
    Affine,
    CostSpec,
    Curvature,
    Exponential,
    Linear,
    LinearMinusOne,
    LogConcave,
    Polynomial,
    Power,
    Tabulated,
    classify_curvature,
    eval_cost,
    eval_fusion_cost,
    eval_fusion_deriv,
    eval_incremental_deriv,
)
from repfusion.errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    ExtrapolationError,
    RepfusionError,
    UnsupportedRegimeError,
)
from repfusion.fusion_core import general_mse, optimal_weights, total_cost, uniform_fidelities
from repfusion.planner import (
    Regime,
    RegimeKind,
    StrategyPlan,
    cost_slope,
    plan,
    select_optimal_n,
    solve_continuous_minimizer,
    threshold_tau,
    v_of_tau,
)
from repfusion.simulator import (
    PerturbationKind,
    SimulationConfig,
    SimulationReport,
    estimate_tail,
    run_fusion_trials,
)

__version__ = "0.1.0"
