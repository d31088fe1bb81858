"""Monte Carlo check of the fused MSE and the tail bounds.

Draws random fidelity vectors, fuses with inverse-variance weights and
reports empirical MSE against 1/sum(theta), plus the tail probability at a
few epsilons next to the Chebyshev and sub-Gaussian bounds.

    python3 scripts/mc_validation.py --configs 10 --trials 1000000
"""

import argparse
import math

import numpy as np

from repfusion.simulator import PerturbationKind, SimulationConfig, run_fusion_trials


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=int, default=10)
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    kinds = list(PerturbationKind)
    within = 0
    print(f"{'kind':>10} {'N':>2} {'analytic':>10} {'empirical':>10} {'z':>6}")
    for i in range(args.configs):
        kind = kinds[i % len(kinds)]
        theta = tuple(float(x) for x in np.exp(rng.uniform(math.log(0.1), math.log(10), rng.integers(1, 6))))
        mmse = 1.0 / math.fsum(theta)
        eps = tuple(c * math.sqrt(mmse) for c in (1.0, 2.0, 3.0))
        cfg = SimulationConfig.with_optimal_weights(
            kind, theta, trials=args.trials, seed=args.seed * 1000 + i, epsilons=eps)
        r = run_fusion_trials(cfg, workers=args.workers)
        z = (r.empirical_mse - r.analytic_mse) / r.mse_std_err if r.mse_std_err else 0.0
        within += abs(z) <= 3
        print(f"{kind.value:>10} {len(theta):2d} {r.analytic_mse:10.5f} {r.empirical_mse:10.5f} {z:6.2f}")
        for t in r.tail_estimates:
            print(f"{'':>14} eps={t.epsilon:.4f} P={t.empirical_prob:.5f} "
                  f"cheb={t.chebyshev_bound:.4f} subg={t.subgaussian_bound:.4f}")
    print(f"\n{within}/{args.configs} configurations within 3 standard errors")


if __name__ == "__main__":
    main()
