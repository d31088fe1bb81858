"""Locate the fusion threshold T and tabulate V(tau) around it.

For each model the planner's T is compared with the 40-digit bisection
oracle, then V(tau) is listed on a log grid with the predicted regime and
the continuous minimizer a_o.

    python3 scripts/reproduce_threshold.py
"""

import argparse

import numpy as np

from repfusion import CostSpec, Exponential, LinearMinusOne, Power
from repfusion.oracle import bisect_v_inverse
from repfusion.planner import cutoff_value, solve_continuous_minimizer, threshold_tau, v_of_tau

MODELS = {
    "exponential": (CostSpec(7.0, Exponential(1.0, 1.0)), LinearMinusOne(1.0)),
    "quadratic": (CostSpec(3.0, Power(1.0, 2.0)), LinearMinusOne(1.0)),
    "cubic": (CostSpec(1.0, Power(0.5, 3.0)), LinearMinusOne(0.5)),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--span", type=float, default=4.0, help="grid covers [T/span, T*span]")
    args = ap.parse_args()

    for name, (cost, fusion) in MODELS.items():
        cutoff = cutoff_value(cost, fusion)
        t = threshold_tau(cost, fusion).threshold
        t_ref = bisect_v_inverse(cost, cutoff)
        print(f"\n{name}: cutoff={cutoff:g}  T={t:.15g}  oracle={t_ref:.15g}  rel={abs(t - t_ref) / t_ref:.2e}")
        print(f"{'tau':>12} {'V(tau)':>14} {'regime':>8} {'a_o':>10}")
        for tau in np.geomspace(t / args.span, t * args.span, args.points):
            v = v_of_tau(cost, float(tau))
            a_o = solve_continuous_minimizer(cost, fusion, float(tau))
            regime = "fused" if cutoff < v else "single"
            print(f"{tau:12.6g} {v:14.6g} {regime:>8} {a_o:10.4f}")


if __name__ == "__main__":
    main()
