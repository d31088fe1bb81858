"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 domain error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

from repfusion import __version__
from repfusion.cost_model import cost_spec_from_dict, fusion_spec_from_dict
from repfusion.errors import ConfigError, DivergenceError, DomainError, RepfusionError
from repfusion.fusion_core import total_cost
from repfusion.planner import RegimeKind, plan, threshold_tau, v_of_tau
from repfusion.simulator import SimulationConfig, run_fusion_trials
from repfusion.verify import DEFAULT_TAUS, verify_config

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3


class _InputError(Exception):
    pass


def fmt(x: float) -> str:
    return format(x, ".17g")


def _float_list(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise _InputError(f"config {path} is not valid JSON: {exc}") from None


def load_model_config(path: str):
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object with 'cost' and 'fusion'")
    unknown = set(raw) - {"cost", "fusion"}
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    if "cost" not in raw or "fusion" not in raw:
        raise ConfigError("config needs both 'cost' and 'fusion'")
    return cost_spec_from_dict(raw["cost"]), fusion_spec_from_dict(raw["fusion"])


def _digest(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _emit(text: str, out: str | None, command: str, resolved: dict, seed: int = 0) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8", newline="")
    manifest = {
        "command": command,
        "config_digest": _digest(resolved),
        "seed": seed,
        "tool_version": __version__,
        "outputs": [out],
    }
    Path(out + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _model_resolved(cost, fusion, **params) -> dict:
    return {"cost": cost.to_dict(), "fusion": fusion.to_dict(), "params": params}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_plan(args) -> int:
    cost, fusion = load_model_config(args.config)
    result = plan(cost, fusion, args.tau)
    text = json.dumps(result.to_dict(), indent=2) + "\n"
    _emit(text, args.out, "plan", _model_resolved(cost, fusion, tau=args.tau))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cost, fusion = load_model_config(args.config)
    if args.n_max < 1:
        raise DomainError(f"--n-max must be >= 1, got {args.n_max}")
    buf = io.StringIO()
    buf.write("tau,n,total_cost,is_argmin\n")
    for tau in args.tau_list:
        costs = [total_cost(cost, fusion, tau, n) for n in range(1, args.n_max + 1)]
        best = min(range(len(costs)), key=lambda i: (costs[i], i))
        for i, c in enumerate(costs):
            buf.write(f"{fmt(tau)},{i + 1},{fmt(c)},{'true' if i == best else 'false'}\n")
    _emit(buf.getvalue(), args.out, "sweep",
          _model_resolved(cost, fusion, tau_list=args.tau_list, n_max=args.n_max))
    return EXIT_OK


def cmd_threshold(args) -> int:
    cost, fusion = load_model_config(args.config)
    regime = threshold_tau(cost, fusion)
    if regime.kind is RegimeKind.LINEAR_ALWAYS_SINGLE:
        raise DomainError("linear incremental cost: a single unit is always optimal, "
                          "so no fusion threshold exists")
    if regime.kind is RegimeKind.CONCAVE_ALWAYS_SINGLE:
        raise DomainError("concave incremental cost: sub-additivity makes a single unit "
                          "always optimal, so no fusion threshold exists")
    buf = io.StringIO()
    buf.write("tau,v_tau,cutoff,region\n")
    for tau in args.tau_list:
        v = v_of_tau(cost, tau)
        region = "fused" if regime.cutoff < v else "single"
        buf.write(f"{fmt(tau)},{fmt(v)},{fmt(regime.cutoff)},{region}\n")
    _emit(buf.getvalue(), args.out, "threshold", _model_resolved(cost, fusion, tau_list=args.tau_list))
    if regime.kind is RegimeKind.CONVEX_THRESHOLDED:
        t = regime.threshold
        print(f"T={'unbounded' if math.isinf(t) else fmt(t)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    raw = _read_json(args.config)
    if isinstance(raw, dict):
        raw = dict(raw)
        if args.trials is not None:
            raw["trials"] = args.trials
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.epsilons is not None:
            raw["epsilons"] = args.epsilons
    cfg = SimulationConfig.from_dict(raw)
    report = run_fusion_trials(cfg, workers=args.workers)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    _emit(text, args.out, "simulate", cfg.to_dict(), seed=cfg.seed)
    return EXIT_OK


def cmd_verify(args) -> int:
    cost, fusion = load_model_config(args.config)
    taus = args.tau_list if args.tau_list is not None else list(DEFAULT_TAUS)
    if any(not t > 0.0 for t in taus):
        raise DomainError("every target tau must be > 0")
    verdicts = verify_config(cost, fusion, taus, seed=args.seed or 0)
    for v in verdicts:
        print(v.line())
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repfusion",
        description="Plan cost-optimal repetition strategies for unreliable computational units.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.set_defaults(func=func)
        return p

    p = add("plan", cmd_plan, "optimal strategy for one target MSE")
    p.add_argument("--tau", type=float, required=True)

    p = add("sweep", cmd_sweep, "total cost for N = 1..n-max at each target (CSV)")
    p.add_argument("--tau-list", type=_float_list, required=True)
    p.add_argument("--n-max", type=int, default=50)

    p = add("threshold", cmd_threshold, "V(tau) against the single-unit cutoff (CSV)")
    p.add_argument("--tau-list", type=_float_list, required=True)

    p = add("simulate", cmd_simulate, "Monte Carlo fusion trials (JSON report)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilons", type=_float_list, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = add("verify", cmd_verify, "run the brute-force oracle suite")
    p.add_argument("--tau-list", type=_float_list, default=None)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (_InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, DivergenceError, RepfusionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # exit-code contract admits no other values
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
