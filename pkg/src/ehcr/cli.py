"""Command-line entry point.

Subcommands: solve (one decomposition run), oracle (exhaustive schedule
search), sweep (Monte-Carlo figure CSVs), check (feasibility and optimality
audit of a saved policy). Exit codes: 0 success, 2 malformed input, 3 solver
failure or failed audit.
"""

import argparse
import datetime
import json
import os
import platform
import sys

import numpy as np

from . import __version__
from .baselines import exhaustive_policy_oracle
from .errors import ConvergenceError, EhcrError, InstanceError, SweepError, UsageError
from .experiments import (
    FIGURE_IDS,
    RNG_ALGORITHM,
    figure_spec,
    run_sweep,
    spec_from_dict,
    write_sweep_csv,
)
from .gbd import solve_gbd, write_trace
from .model import (
    PowerAllocation,
    Schedule,
    check_feasible_P1,
    check_feasible_P2,
    instance_to_dict,
    load_instance,
    rate,
)
from .primal import KKT_ACCEPT, DualSet, PrimalSolution, kkt_check, solve_primal


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--epsilon", type=float, default=1e-4, help="bound-gap tolerance")
    parser.add_argument("--out-dir", default="out", help="directory for run artifacts")
    parser.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials per grid point")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ehcr",
        description="Offline harvest-or-transmit scheduling for an energy-harvesting "
        "underlay secondary link.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance by decomposition")
    p_solve.add_argument("instance", help="instance JSON file")
    p_solve.add_argument(
        "--init-zeros",
        action="store_true",
        help="start from the all-transmit schedule instead of a seeded draw",
    )
    _add_common(p_solve)

    p_oracle = sub.add_parser("oracle", help="solve one instance exhaustively")
    p_oracle.add_argument("instance", help="instance JSON file")
    _add_common(p_oracle)

    p_sweep = sub.add_parser("sweep", help="run figure sweeps from a spec file")
    p_sweep.add_argument("spec", help="sweep spec JSON file")
    _add_common(p_sweep)

    p_check = sub.add_parser("check", help="audit a saved policy against an instance")
    p_check.add_argument("instance", help="instance JSON file")
    p_check.add_argument("policy", help="policy JSON file")
    _add_common(p_check)
    return parser


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_metadata(out_dir, args, extra):
    doc = {
        "tool": "ehcr",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "rng": f"{RNG_ALGORITHM}; per-trial keys via splitmix64(seed, point, trial, lane)",
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": args.seed,
        "epsilon": args.epsilon,
    }
    doc.update(extra)
    _write_json(os.path.join(out_dir, "metadata.json"), doc)


def _policy_doc(params, chan, schedule, allocation, gap, iterations, stalled=False):
    # Re-solving at the final schedule is cheap and deterministic; it hands
    # the audit a multiplier set without widening the policy object.
    sol = solve_primal(params, chan, schedule)
    return {
        "schedule": [int(b) for b in schedule.I_H],
        "p_s": [float(x) for x in allocation.p_s],
        "objective": allocation.objective,
        "gap": gap,
        "iterations": iterations,
        "stalled": stalled,
        "duals": {
            "theta": sol.duals.theta,
            "lam": [float(x) for x in sol.duals.lam],
            "gamma": [float(x) for x in sol.duals.gamma],
            "delta": [float(x) for x in sol.duals.delta],
            "mu": [float(x) for x in sol.duals.mu],
        },
    }


def _cmd_solve(args):
    params, chan = load_instance(args.instance)
    initial = Schedule(I_H=np.zeros(params.M, dtype=np.int8)) if args.init_zeros else None
    policy, trace = solve_gbd(
        params, chan, epsilon=args.epsilon, seed=args.seed, initial_schedule=initial
    )
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "instance.json"), instance_to_dict(params, chan))
    _write_json(
        os.path.join(args.out_dir, "policy.json"),
        _policy_doc(
            params, chan, policy.schedule, policy.allocation, policy.gap,
            policy.iterations, trace.stalled,
        ),
    )
    write_trace(
        trace,
        os.path.join(args.out_dir, "trace.csv"),
        os.path.join(args.out_dir, "cuts.json"),
    )
    _write_metadata(args.out_dir, args, {"command": "solve", "iterations": policy.iterations})
    print(
        f"objective {policy.allocation.objective!r} bits/s/Hz, "
        f"schedule {policy.schedule.bits() or '(none)'}, "
        f"{policy.iterations} iterations, gap {policy.gap!r}"
    )
    return 0


def _cmd_oracle(args):
    params, chan = load_instance(args.instance)
    policy = exhaustive_policy_oracle(params, chan)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "instance.json"), instance_to_dict(params, chan))
    _write_json(
        os.path.join(args.out_dir, "policy.json"),
        _policy_doc(
            params, chan, policy.schedule, policy.allocation, policy.gap, policy.iterations
        ),
    )
    _write_metadata(args.out_dir, args, {"command": "oracle"})
    print(
        f"objective {policy.allocation.objective!r} bits/s/Hz, "
        f"schedule {policy.schedule.bits() or '(none)'} "
        f"({policy.iterations} schedules scanned)"
    )
    return 0


def _cmd_sweep(args):
    with open(args.spec, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{args.spec}: not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and doc.get("figure") == "all":
        overrides = {k: doc[k] for k in ("trials", "seed", "epsilon") if k in doc}
        jobs = [(fig, figure_spec(fig, **overrides)) for fig in FIGURE_IDS]
    else:
        spec = spec_from_dict(doc)
        jobs = [(doc.get("figure", "sweep"), spec)]
    os.makedirs(args.out_dir, exist_ok=True)
    written = []
    for name, spec in jobs:
        if args.trials is not None:
            spec = type(spec)(
                spec.variable, spec.grid, spec.params, spec.stats,
                args.trials, spec.seed, spec.epsilon,
            )
        rows = run_sweep(spec, workers=args.workers)
        path = os.path.join(args.out_dir, f"{name}.csv")
        write_sweep_csv(rows, path)
        written.append(path)
        print(f"wrote {path} ({len(rows)} grid points, {spec.trials} trials each)")
    _write_metadata(args.out_dir, args, {"command": "sweep", "csv_files": written})
    return 0


def _cmd_check(args):
    params, chan = load_instance(args.instance)
    with open(args.policy, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{args.policy}: not valid JSON: {exc}") from exc
    try:
        schedule = Schedule(I_H=np.array(doc["schedule"], dtype=np.int8))
        p_s = np.array(doc["p_s"], dtype=np.float64)
        stored_objective = float(doc["objective"])
        duals_doc = doc["duals"]
        duals = DualSet(
            theta=duals_doc["theta"],
            lam=duals_doc["lam"],
            gamma=duals_doc["gamma"],
            delta=duals_doc["delta"],
            mu=duals_doc["mu"],
        )
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"bad policy document: {exc}") from exc

    rep1 = check_feasible_P1(params, chan, schedule, p_s)
    rep2 = check_feasible_P2(params, chan, schedule, p_s)
    recomputed = rate(params, chan, p_s)
    obj_err = abs(recomputed - stored_objective)
    sol = PrimalSolution(
        allocation=PowerAllocation(p_s=p_s, objective=recomputed),
        duals=duals,
        kkt_residual=0.0,
        iterations=0,
    )
    residual = kkt_check(params, chan, schedule, sol)

    ok = True
    for name, rep in (("native", rep1), ("convex", rep2)):
        worst = rep.worst()
        print(
            f"{name} feasibility: min slack {rep.min_slack!r} "
            f"({worst.family}[{worst.index}])"
        )
        ok &= rep.feasible
    print(f"objective: stored {stored_objective!r}, recomputed {recomputed!r}")
    ok &= obj_err <= 1e-9 * max(1.0, abs(recomputed))
    print(f"kkt residual: {residual!r}")
    ok &= residual <= KKT_ACCEPT
    print("PASS" if ok else "FAIL")
    return 0 if ok else 3


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "oracle": _cmd_oracle,
        "sweep": _cmd_sweep,
        "check": _cmd_check,
    }
    try:
        return handlers[args.command](args)
    except (InstanceError, UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, SweepError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except EhcrError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
