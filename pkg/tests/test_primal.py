import numpy as np
import pytest

from conftest import random_instance, random_schedule
from ehcr.errors import ConvergenceError, InstanceError, UnboundedLevelError
from ehcr.model import (
    ChannelRealization,
    PowerAllocation,
    ScenarioParams,
    Schedule,
    check_feasible_P2,
    rate,
)
from ehcr.primal import (
    DualSet,
    PrimalSolution,
    kkt_check,
    solve_primal,
    waterfill_from_duals,
)


def grid_oracle(params, chan, sched, points):
    """Independent brute-force maximizer over a per-coordinate feasible grid.

    Deliberately reimplements the constraints with plain cumulative sums so
    it shares no code with the solver under test.
    """
    M, N = params.M, params.N
    I = np.asarray(sched.I_H, dtype=float)
    harvested = params.alpha * params.p_p * np.cumsum(I) if M else np.zeros(0)
    total = params.E0 + (harvested[-1] if M else 0.0)
    cap = params.E0 + M * params.p_p
    free = [i for i in range(N) if not (i < M and I[i] == 1) and chan.h_ss[i] > 0]
    if not free:
        return 0.0, np.zeros(N)
    axes = []
    for i in free:
        ub = total
        if i < M and chan.h_sp[i] > 0:
            ub = min(ub, params.P_int / chan.h_sp[i])
        if i == 0 and M >= 1:
            ub = min(ub, params.E0)
        axes.append(np.linspace(0.0, ub, points))
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.zeros((mesh[0].size, N))
    for k, i in enumerate(free):
        P[:, i] = mesh[k].ravel()
    tol = 1e-12
    ok = np.ones(len(P), dtype=bool)
    spent = np.cumsum(P, axis=1)
    if M >= 1:
        ok &= P[:, 0] <= (1.0 - I[0]) * params.E0 + tol
    for i in range(2, M + 1):
        ok &= P[:, i - 1] <= (1.0 - I[i - 1]) * cap + tol
        ok &= spent[:, i - 1] <= params.E0 + harvested[i - 2] + tol
    for i in range(M + 1, N + 1):
        ok &= spent[:, i - 1] <= total + tol
    for i in range(M):
        ok &= chan.h_sp[i] * P[:, i] <= params.P_int + tol
    P = P[ok]
    den = np.concatenate(
        [params.sigma2 + chan.h_ps * params.p_p, np.full(N - M, params.sigma2)]
    )
    values = np.log2(1.0 + chan.h_ss * P / den).sum(axis=1)
    best = int(np.argmax(values))
    return float(values[best]), P[best]


def test_all_harvest_schedule_is_silent():
    params = ScenarioParams(M=2, N=2, E0=1.0, alpha=0.5, p_p=1.0, P_int=0.1, sigma2=0.1)
    chan = ChannelRealization(h_ss=[0.2, 0.3], h_ps=[0.1, 0.2], h_sp=[0.1, 0.2])
    sol = solve_primal(params, chan, Schedule(I_H=[1, 1]))
    assert np.array_equal(sol.allocation.p_s, [0.0, 0.0])
    assert sol.allocation.objective == 0.0
    assert sol.kkt_residual <= 1e-9


def test_single_slot_exhausts_budget():
    params = ScenarioParams(M=0, N=1, E0=2.0, alpha=0.5, p_p=0.0, P_int=1.0, sigma2=1.0)
    chan = ChannelRealization(h_ss=[1.0], h_ps=[], h_sp=[])
    sol = solve_primal(params, chan, Schedule(I_H=[]))
    assert sol.allocation.p_s[0] == pytest.approx(2.0, abs=1e-7)
    assert sol.allocation.objective == pytest.approx(np.log2(3.0), abs=1e-8)


def test_identical_slots_split_evenly():
    params = ScenarioParams(M=0, N=2, E0=2.0, alpha=0.5, p_p=0.0, P_int=1.0, sigma2=0.1)
    chan = ChannelRealization(h_ss=[0.4, 0.4], h_ps=[], h_sp=[])
    sol = solve_primal(params, chan, Schedule(I_H=[]))
    assert sol.allocation.p_s == pytest.approx([1.0, 1.0], abs=1e-7)


def test_matches_grid_oracle_on_fixed_instance(rng):
    params = ScenarioParams(M=2, N=3, E0=1.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
    chan = ChannelRealization(
        h_ss=rng.exponential(0.1, 3), h_ps=rng.exponential(0.1, 2),
        h_sp=rng.exponential(0.1, 2),
    )
    sched = Schedule(I_H=[0, 1])
    sol = solve_primal(params, chan, sched)
    grid_val, grid_p = grid_oracle(params, chan, sched, points=200)
    budget = params.E0 + params.alpha * params.p_p
    assert np.max(np.abs(sol.allocation.p_s - grid_p)) <= 1.5e-2 * max(budget, 1.0)
    assert sol.allocation.objective >= grid_val - 1e-3


def test_objective_dominates_grid_on_small_instances(rng):
    for _ in range(15):
        params, chan = random_instance(rng, M=int(rng.integers(0, 3)), N=None)
        if params.N > 3:
            params = ScenarioParams(M=min(params.M, 3), N=3, E0=params.E0,
                                    alpha=params.alpha, p_p=params.p_p,
                                    P_int=params.P_int, sigma2=params.sigma2)
            chan = ChannelRealization(h_ss=chan.h_ss[:3], h_ps=chan.h_ps[:params.M],
                                      h_sp=chan.h_sp[:params.M])
        sched = random_schedule(rng, params.M)
        sol = solve_primal(params, chan, sched)
        grid_val, _ = grid_oracle(params, chan, sched, points=101)
        assert sol.allocation.objective >= grid_val - 1e-3


def test_kkt_residual_small_on_random_instances(rng):
    for _ in range(100):
        params, chan = random_instance(rng, M=int(rng.integers(0, 7)))
        sched = random_schedule(rng, params.M)
        sol = solve_primal(params, chan, sched)
        assert sol.kkt_residual <= 1e-6
        rep = check_feasible_P2(params, chan, sched, sol.allocation.p_s)
        assert rep.min_slack >= -1e-8


def test_kkt_check_flags_injected_violation():
    params = ScenarioParams(M=1, N=1, E0=2.0, alpha=0.5, p_p=1.0, P_int=10.0, sigma2=0.1)
    chan = ChannelRealization(h_ss=[0.5], h_ps=[0.1], h_sp=[0.01])
    sched = Schedule(I_H=[0])
    sol = solve_primal(params, chan, sched)
    inflated = sol.allocation.p_s.copy()
    inflated[0] += 1.0
    bad = PrimalSolution(
        allocation=PowerAllocation(p_s=inflated, objective=rate(params, chan, inflated)),
        duals=sol.duals,
        kkt_residual=0.0,
        iterations=0,
    )
    assert kkt_check(params, chan, sched, bad) >= 1.0 - 1e-9
    rep = check_feasible_P2(params, chan, sched, inflated)
    assert rep.worst().family == "budget_first"


def test_waterfill_huge_duals_shut_everything_off(rng):
    params, chan = random_instance(rng, M=3, N=5)
    duals = DualSet(theta=1e6, lam=np.full(2, 1e6), gamma=np.full(2, 1e6),
                    delta=np.full(2, 1e6), mu=np.zeros(3))
    assert np.array_equal(waterfill_from_duals(params, chan, duals), np.zeros(5))


def test_waterfill_single_slot_closed_form():
    params = ScenarioParams(M=0, N=1, E0=5.0, alpha=0.5, p_p=0.0, P_int=1.0, sigma2=0.1)
    chan = ChannelRealization(h_ss=[1.0], h_ps=[], h_sp=[])
    duals = DualSet(theta=0.0, lam=[], gamma=[], delta=[0.5], mu=[])
    p = waterfill_from_duals(params, chan, duals)
    assert p[0] == pytest.approx(1.9, abs=1e-12)


def test_waterfill_rejects_nonpositive_level():
    params = ScenarioParams(M=0, N=1, E0=5.0, alpha=0.5, p_p=0.0, P_int=1.0, sigma2=0.1)
    chan = ChannelRealization(h_ss=[1.0], h_ps=[], h_sp=[])
    duals = DualSet(theta=0.0, lam=[], gamma=[], delta=[0.0], mu=[])
    with pytest.raises(UnboundedLevelError):
        waterfill_from_duals(params, chan, duals)


def test_waterfill_reconstructs_solver_powers(rng):
    for _ in range(100):
        params, chan = random_instance(rng, M=int(rng.integers(0, 7)))
        sched = random_schedule(rng, params.M)
        sol = solve_primal(params, chan, sched)
        rebuilt = waterfill_from_duals(params, chan, sol.duals)
        assert np.max(np.abs(rebuilt - sol.allocation.p_s)) <= 1e-5


def test_relaxing_caps_never_hurts(rng):
    for _ in range(40):
        params, chan = random_instance(rng, M=int(rng.integers(1, 6)))
        sched = random_schedule(rng, params.M)
        base = solve_primal(params, chan, sched).allocation.objective
        looser = ScenarioParams(M=params.M, N=params.N, E0=params.E0,
                                alpha=params.alpha, p_p=params.p_p,
                                P_int=params.P_int * 10.0, sigma2=params.sigma2)
        richer = ScenarioParams(M=params.M, N=params.N, E0=params.E0 + 1.0,
                                alpha=params.alpha, p_p=params.p_p,
                                P_int=params.P_int, sigma2=params.sigma2)
        assert solve_primal(looser, chan, sched).allocation.objective >= base - 1e-8
        assert solve_primal(richer, chan, sched).allocation.objective >= base - 1e-8


def test_zero_budget_all_transmit_is_silent(rng):
    params, chan = random_instance(rng, M=3, N=5, E0=0.0)
    sol = solve_primal(params, chan, Schedule(I_H=[0, 0, 0]))
    assert np.array_equal(sol.allocation.p_s, np.zeros(5))
    assert sol.allocation.objective == 0.0
    assert sol.kkt_residual <= 1e-9


def test_bad_tolerance_rejected(rng):
    params, chan = random_instance(rng, M=1, N=2)
    with pytest.raises(InstanceError):
        solve_primal(params, chan, Schedule(I_H=[0]), tol=0.0)


def test_iteration_cap_raises_with_best_iterate(rng):
    params, chan = random_instance(rng, M=2, N=6, E0=2.0)
    with pytest.raises(ConvergenceError) as err:
        solve_primal(params, chan, Schedule(I_H=[0, 0]), max_iter=2)
    assert err.value.payload is not None
