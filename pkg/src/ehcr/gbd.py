"""Alternating primal/master decomposition loop with bound bookkeeping.

Each pass solves the power subproblem at the current schedule (lower bound),
appends its cut, and re-solves the master over all cuts (upper bound). The
loop stops when the bounds meet within epsilon. Bounds are tracked in
bits/s/Hz; the master level is converted from the cut scale by 1/ln 2.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import ConvergenceError, UsageError
from .master import BendersCut, build_cut, solve_master
from .model import LN2, PowerAllocation, Schedule, check_dims
from .primal import solve_primal


@dataclass(frozen=True)
class IterationRecord:
    """One pass of the loop: the schedule whose primal was solved, both
    bounds after the pass, that primal's objective, and the appended cut."""

    index: int
    schedule: Schedule
    lower_bound: float
    upper_bound: float
    primal_objective: float
    cut: BendersCut


@dataclass(frozen=True)
class OptimalPolicy:
    schedule: Schedule
    allocation: PowerAllocation
    gap: float
    iterations: int


@dataclass(frozen=True)
class GbdTrace:
    records: tuple
    policy: object  # OptimalPolicy, or None when attached to an error
    epsilon: float
    stalled: bool


@dataclass(frozen=True)
class BoundCheckReport:
    passed: bool
    failures: tuple  # (iteration index, message) pairs

    def __bool__(self):
        return self.passed


def solve_gbd(params, chan, epsilon=1e-4, seed=0, max_iter=200, initial_schedule=None):
    """Optimal harvest-or-transmit policy via the decomposition loop.

    The seed drives only the initial schedule draw (uniform over binary
    schedules, Philox counter-based generator). Returns (policy, trace);
    the policy is the best primal iterate, which is always feasible.
    """
    check_dims(params, chan)
    if epsilon <= 0:
        raise UsageError("epsilon must be positive")
    if max_iter < 1:
        raise UsageError("max_iter must be at least 1")
    M = params.M
    if initial_schedule is not None:
        sched = initial_schedule
        check_dims(params, chan, sched)
    else:
        rng = Generator(Philox(key=np.uint64(seed)))
        sched = Schedule(I_H=rng.integers(0, 2, size=M))

    visited = set()
    visit_order = []
    cuts = []
    records = []
    lower = -math.inf
    best_sched = None
    best_alloc = None
    stalled = False
    gap = math.inf

    for index in range(1, max_iter + 1):
        sol = solve_primal(params, chan, sched)
        objective = sol.allocation.objective
        if objective > lower:
            lower = objective
            best_sched = sched
            best_alloc = sol.allocation
        if sched.as_tuple() not in visited:
            visited.add(sched.as_tuple())
            visit_order.append(sched)
        cuts.append(build_cut(params, chan, sol))
        master = solve_master(cuts, M, hints=visit_order)
        upper = master.t / LN2
        gap = abs(upper - lower)
        records.append(
            IterationRecord(
                index=index,
                schedule=sched,
                lower_bound=lower,
                upper_bound=upper,
                primal_objective=objective,
                cut=cuts[-1],
            )
        )
        if gap <= epsilon:
            break
        proposal = master.I_H
        if proposal.as_tuple() in visited:
            # Exact cuts make a revisit possible only through tolerance
            # mismatch between primal strong duality and master arithmetic.
            stalled = True
            break
        sched = proposal
    else:
        raise ConvergenceError(
            f"decomposition did not close the gap within {max_iter} iterations "
            f"(gap {gap:.3e}, epsilon {epsilon:.3e})",
            payload=GbdTrace(
                records=tuple(records), policy=None, epsilon=epsilon, stalled=False
            ),
        )

    policy = OptimalPolicy(
        schedule=best_sched,
        allocation=best_alloc,
        gap=gap,
        iterations=len(records),
    )
    trace = GbdTrace(
        records=tuple(records), policy=policy, epsilon=epsilon, stalled=stalled
    )
    return policy, trace


def bound_history_check(trace):
    """Audit a trace: lower bounds must never fall, upper bounds never rise
    (1e-9 slack each), and the final gap must close within epsilon."""
    if not trace.records:
        raise UsageError("trace has no iterations")
    failures = []
    for prev, cur in zip(trace.records, trace.records[1:]):
        if cur.lower_bound < prev.lower_bound - 1e-9:
            failures.append(
                (cur.index, f"lower bound fell: {prev.lower_bound!r} -> {cur.lower_bound!r}")
            )
        if cur.upper_bound > prev.upper_bound + 1e-9:
            failures.append(
                (cur.index, f"upper bound rose: {prev.upper_bound!r} -> {cur.upper_bound!r}")
            )
    last = trace.records[-1]
    gap = abs(last.upper_bound - last.lower_bound)
    if gap > trace.epsilon:
        failures.append((last.index, f"final gap {gap!r} exceeds epsilon {trace.epsilon!r}"))
    return BoundCheckReport(passed=not failures, failures=tuple(failures))


def trace_to_csv(trace):
    """Render the per-iteration records in the documented CSV layout."""
    lines = ["iter,lower_bound,upper_bound,schedule_bits,primal_objective"]
    for rec in trace.records:
        lines.append(
            f"{rec.index},{rec.lower_bound!r},{rec.upper_bound!r},"
            f"{rec.schedule.bits()},{rec.primal_objective!r}"
        )
    return "\n".join(lines) + "\n"


def cuts_to_json(trace):
    return json.dumps({"cuts": [rec.cut.to_dict() for rec in trace.records]}, indent=2)


def write_trace(trace, csv_path, cuts_path=None):
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(trace_to_csv(trace))
    if cuts_path is not None:
        with open(cuts_path, "w", encoding="utf-8") as fh:
            fh.write(cuts_to_json(trace) + "\n")
