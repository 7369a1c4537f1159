"""Reference policies: the exhaustive schedule oracle and a greedy baseline.

The oracle solves the power subproblem at every binary schedule and is the
ground truth the decomposition is validated against. The greedy policy is a
myopic stand-in comparison point: it decides slot by slot with no lookahead
beyond a remaining-slot channel average, and always produces a feasible
(hence dominated) allocation.
"""

import numpy as np

from .errors import CapacityError
from .gbd import OptimalPolicy
from .model import PowerAllocation, Schedule, check_dims
from .primal import solve_primal

_ORACLE_CAP = 16


def exhaustive_policy_oracle(params, chan):
    """Best policy over all 2^M schedules (first maximum wins ties, which is
    the lexicographically smallest schedule). Guarded at M <= 16."""
    check_dims(params, chan)
    M = params.M
    if M > _ORACLE_CAP:
        raise CapacityError(f"exhaustive oracle limited to M <= {_ORACLE_CAP}, got {M}")
    best = None
    best_sched = None
    for n in range(1 << M):
        bits = [(n >> (M - 1 - i)) & 1 for i in range(M)]
        sched = Schedule(I_H=np.array(bits, dtype=np.int8))
        sol = solve_primal(params, chan, sched)
        if best is None or sol.allocation.objective > best.objective:
            best = sol.allocation
            best_sched = sched
    return OptimalPolicy(schedule=best_sched, allocation=best, gap=0.0, iterations=1 << M)


def greedy_myopic_policy(params, chan):
    """Slot-by-slot heuristic policy.

    While the licensed user is active, the slot transmits at the single-slot
    optimum min(battery, cap) unless the battery is the binding limit; a
    battery-limited slot harvests instead when the banked energy would earn
    more at the average remaining direct gain than transmitting earns now.
    After the licensed user leaves, the battery at that point is split
    equally across the remaining slots. Battery accounting is exact, so the
    output is always feasible.
    """
    check_dims(params, chan)
    M, N = params.M, params.N
    battery = params.E0
    p = np.zeros(N)
    I = np.zeros(M, dtype=np.int8)
    for i in range(M):
        cap = np.inf if chan.h_sp[i] <= 0.0 else params.P_int / chan.h_sp[i]
        p_tx = min(battery, cap)
        r_tx = np.log2(
            1.0 + chan.h_ss[i] * p_tx / (params.sigma2 + chan.h_ps[i] * params.p_p)
        )
        if battery <= cap:  # battery is the binding limit; weigh harvesting
            future_gain = float(np.mean(chan.h_ss[i + 1 :])) if i + 1 < N else 0.0
            banked = params.alpha * params.p_p
            r_harvest = np.log2(1.0 + future_gain * banked / params.sigma2)
            if r_harvest > r_tx:
                I[i] = 1
                battery += banked
                continue
        p[i] = p_tx
        battery -= p_tx
    if N > M:
        p[M:] = battery / (N - M)
    allocation = PowerAllocation.from_powers(params, chan, p)
    return OptimalPolicy(
        schedule=Schedule(I_H=I), allocation=allocation, gap=0.0, iterations=N
    )
