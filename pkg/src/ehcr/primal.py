"""Power-allocation subproblem for a fixed harvest schedule.

Maximizes the slot rate sum over nonnegative powers subject to the budget,
lock, causality, and interference rows. The solve is a primal-dual interior
point method (predictor-corrector with merit-damped steps, since the
objective is nonlinear) on the natural-log objective; its row multipliers are
exactly the dual set the decomposition cuts need, and the closed-form water
level reproduces the powers from those multipliers.

Slots that a constraint pins to zero (harvest slots, empty budgets, a zero
interference cap, or a dead direct link) are eliminated before the solve and
their multipliers are assigned afterwards from the stationarity conditions,
so the interior iterates never touch the boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InstanceError, UnboundedLevelError
from .model import PowerAllocation, check_dims

# Powers below this are audited as boundary slots (one-sided stationarity);
# the bar keeps the dropped nonnegativity multiplier, roughly gap/power,
# below the KKT acceptance threshold.
ZERO_POWER = 1e-6

KKT_ACCEPT = 1e-6  # residual every accepted primal solution must beat

_MAX_ITER_DEFAULT = 200


@dataclass(frozen=True)
class DualSet:
    """Nonnegative row multipliers of the fixed-schedule problem.

    theta: first-slot budget row (0.0 when M = 0).
    lam:   per-slot lock rows for slots 2..M, length max(M-1, 0).
    gamma: cumulative-spend rows ending at slots 2..M, length max(M-1, 0).
    delta: cumulative-spend rows ending past slot M, length N - M.
    mu:    per-slot interference rows, length M.

    Convention: the multipliers balance the natural-log rate gradient, so
    stationarity reads h/(den + h*p) = level aggregate with no log-base
    factor, and the water-level formula applies to them verbatim. Cuts built
    from them live on the same scale.
    """

    theta: float
    lam: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        value = float(self.theta)
        if not np.isfinite(value) or value < 0:
            raise InstanceError("theta must be finite and nonnegative")
        object.__setattr__(self, "theta", value)
        for name in ("lam", "gamma", "delta", "mu"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if arr.ndim != 1:
                raise InstanceError(f"dual vector {name} must be 1-D")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InstanceError(f"dual vector {name} must be finite and nonnegative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def validate_shape(self, params):
        M, N = params.M, params.N
        expect = {
            "lam": max(M - 1, 0),
            "gamma": max(M - 1, 0),
            "delta": N - M,
            "mu": M,
        }
        for name, size in expect.items():
            if len(getattr(self, name)) != size:
                raise InstanceError(
                    f"dual vector {name} has length {len(getattr(self, name))}, expected {size}"
                )


@dataclass(frozen=True)
class PrimalSolution:
    allocation: PowerAllocation
    duals: DualSet
    kkt_residual: float
    iterations: int


def _gain_floors(params, chan):
    """Per-slot (numerator, denominator) of the rate terms."""
    num = chan.h_ss
    den = np.empty(params.N)
    den[: params.M] = params.sigma2 + chan.h_ps * params.p_p
    den[params.M :] = params.sigma2
    return num, den


class _RowSystem:
    """Inequality rows G p <= w of the fixed-schedule problem, in a fixed order:
    budget_first (if M >= 1), locks for slots 2..M, head causality prefixes
    2..M, tail causality prefixes M+1..N, interference for slots 1..M.
    """

    def __init__(self, params, chan, sched):
        M, N = params.M, params.N
        I = sched.I_H.astype(np.float64)
        harvested = params.alpha * params.p_p * np.cumsum(I) if M else np.zeros(0)
        total = params.E0 + (harvested[-1] if M >= 1 else 0.0)
        cap = params.harvest_cap

        n_rows = (1 if M >= 1 else 0) + 2 * max(M - 1, 0) + (N - M) + M
        G = np.zeros((n_rows, N))
        w = np.zeros(n_rows)
        r = 0
        self.budget_row = None
        if M >= 1:
            self.budget_row = r
            G[r, 0] = 1.0
            w[r] = (1.0 - I[0]) * params.E0
            r += 1
        self.lock_rows = slice(r, r + max(M - 1, 0))
        for j in range(M - 1):
            G[r, j + 1] = 1.0
            w[r] = (1.0 - I[j + 1]) * cap
            r += 1
        self.head_rows = slice(r, r + max(M - 1, 0))
        for j in range(M - 1):
            G[r, : j + 2] = 1.0
            w[r] = params.E0 + harvested[j]
            r += 1
        self.tail_rows = slice(r, r + (N - M))
        for j in range(N - M):
            G[r, : M + j + 1] = 1.0
            w[r] = total
            r += 1
        self.mu_rows = slice(r, r + M)
        for i in range(M):
            G[r, i] = chan.h_sp[i]
            w[r] = params.P_int
            r += 1
        self.G = G
        self.w = w

    def duals_from_rows(self, row_duals):
        z = np.asarray(row_duals, dtype=np.float64)
        theta = float(z[self.budget_row]) if self.budget_row is not None else 0.0
        return DualSet(
            theta=theta,
            lam=z[self.lock_rows].copy(),
            gamma=z[self.head_rows].copy(),
            delta=z[self.tail_rows].copy(),
            mu=z[self.mu_rows].copy(),
        )


def _forced_zero_mask(system, num):
    """Slots pinned to zero: member of a zero-rhs row, or zero direct gain."""
    forced = num <= 0.0
    zero_rows = system.w <= 0.0
    if np.any(zero_rows):
        forced = forced | np.any(system.G[zero_rows] > 0.0, axis=0)
    return forced


def _interior_point(num, den, G, w, mu_target, r_target, max_iter):
    """Predictor-corrector interior point for
    min -sum(log(1 + num*p/den))  s.t.  G p <= w, p >= 0.

    Steps are taken jointly and backtracked on a residual merit, because the
    nonlinear gradient can defeat the full Newton step; a strong centering
    pass is the fallback. Every kept row has w > 0, so a small positive start
    is strictly interior. Returns (p, row_duals, iterations, gap_per_var).
    """
    nv = num.size
    R = G.shape[0]
    Gf = np.vstack([G, -np.eye(nv)])
    wf = np.concatenate([w, np.zeros(nv)])
    m = R + nv

    rowsum = G.sum(axis=1) if R else np.ones(1)
    start = 0.45 * float(np.min(w / rowsum)) if R else 1.0
    p = np.full(nv, min(max(start, 1e-10), 1e6))
    s = wf - Gf @ p
    z = np.ones(m)

    def residuals(p_, s_, z_):
        grad = -(num / (den + num * p_))
        r_d = grad + Gf.T @ z_
        r_p = Gf @ p_ + s_ - wf
        return r_d, r_p

    def merit(r_d, r_p, s_, z_, tau):
        # squared norm of the perturbed optimality system; the Newton
        # direction is a descent direction for it even off the central path
        return float(r_d @ r_d + r_p @ r_p + np.sum((s_ * z_ - tau) ** 2))

    best = None
    for it in range(1, max_iter + 1):
        d = den + num * p
        hess = (num / d) ** 2
        r_d, r_p = residuals(p, s, z)
        gap = float(s @ z) / m
        res = max(float(np.max(np.abs(r_d))), float(np.max(np.abs(r_p))))
        if best is None or gap + res < best[0]:
            best = (gap + res, p.copy(), z.copy(), it, gap, res)
        if gap <= mu_target and res <= r_target:
            return p, z[:R], it, gap

        # cap the scaling so a slack that underflows cannot poison the system
        zs = np.minimum(z / np.maximum(s, 1e-300), 1e16)
        Mmat = (Gf.T * zs) @ Gf
        Mmat[np.diag_indices_from(Mmat)] += hess
        try:
            chol = np.linalg.cholesky(Mmat)
        except np.linalg.LinAlgError:
            Mmat[np.diag_indices_from(Mmat)] += 1e-12 * (1.0 + np.max(np.abs(Mmat)))
            chol = np.linalg.cholesky(Mmat)

        def solve_kkt(rc):
            rhs = -r_d - Gf.T @ ((rc + z * r_p) / s)
            dp = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            ds = -r_p - Gf @ dp
            dz = (rc - z * ds) / s
            return dp, ds, dz

        # predictor fixes the centering weight
        dp_a, ds_a, dz_a = solve_kkt(-z * s)
        alpha_a = min(_step_length(s, ds_a), _step_length(z, dz_a))
        gap_aff = float((s + alpha_a * ds_a) @ (z + alpha_a * dz_a)) / m
        sigma = min(0.8, (max(gap_aff, 0.0) / gap) ** 3) if gap > 0 else 0.1

        for attempt in range(2):
            tau = sigma * gap
            dp, ds, dz = solve_kkt(tau - z * s - ds_a * dz_a * (1 - attempt))
            eta = 0.9995 if gap < 1e-8 else 0.99
            alpha = min(1.0, eta * _step_length(s, ds), eta * _step_length(z, dz))
            # backtrack jointly: the nonlinear gradient can defeat long steps
            phi0 = merit(r_d, r_p, s, z, tau)
            accepted = False
            while alpha > 1e-10:
                p_t, s_t, z_t = p + alpha * dp, s + alpha * ds, z + alpha * dz
                r_d_t, r_p_t = residuals(p_t, s_t, z_t)
                if merit(r_d_t, r_p_t, s_t, z_t, tau) <= (1.0 - 0.01 * alpha) * phi0:
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                p, s, z = p_t, s_t, z_t
                break
            # second pass: drop the corrector term and center strongly
            sigma = 0.8
        else:
            break  # no progress possible at this point

    _, p, z, it, gap, res = best
    if gap <= 1e-9 and res <= 1e-8:
        return p, z[:R], it, gap
    raise ConvergenceError(
        f"interior point stalled after {it} iterations (gap {gap:.2e}, residual {res:.2e})",
        payload={"p": p, "row_duals": z[:R]},
    )


def _step_length(v, dv):
    shrink = dv < 0
    if not np.any(shrink):
        return 1.0
    return min(1.0, float(np.min(-v[shrink] / dv[shrink])))


def _coverage_head(duals, chan, i):
    """Level aggregate for 1-based head slot i under the given multipliers."""
    local = duals.theta if i == 1 else float(duals.lam[i - 2])
    g = float(duals.gamma[max(i - 2, 0) :].sum()) if duals.gamma.size else 0.0
    return (
        local
        + float(duals.mu[i - 1]) * float(chan.h_sp[i - 1])
        + g
        + float(duals.delta.sum())
    )


def _coverage_tail(duals, params, i):
    """Level aggregate for 1-based tail slot i (i > M)."""
    return float(duals.delta[i - params.M - 1 :].sum())


def _backfill_duals(params, chan, system, duals, forced, num, den):
    """Assign multipliers of eliminated slots so one-sided stationarity holds.

    Raising a multiplier only touches zero-rhs rows, whose member slots were
    all eliminated, so equality stationarity of transmitting slots is intact.
    """
    M = params.M
    theta = duals.theta
    lam = duals.lam.copy()
    gamma = duals.gamma.copy()
    delta = duals.delta.copy()
    mu = duals.mu.copy()
    w = system.w
    head_rhs = w[system.head_rows]
    tail_rhs = w[system.tail_rows]

    for idx in np.flatnonzero(forced):
        i = idx + 1  # 1-based slot
        if num[idx] <= 0.0:
            continue
        current = DualSet(theta=theta, lam=lam, gamma=gamma, delta=delta, mu=mu)
        grad0 = num[idx] / den[idx]
        if i <= M:
            need = grad0 - _coverage_head(current, chan, i)
            if need <= 0.0:
                continue
            local_rhs = w[system.budget_row] if i == 1 else w[system.lock_rows][i - 2]
            if local_rhs <= 0.0:
                if i == 1:
                    theta += need
                else:
                    lam[i - 2] += need
            elif params.P_int <= 0.0 and chan.h_sp[idx] > 0.0:
                mu[idx] += need / chan.h_sp[idx]
            elif i >= 2 and head_rhs[i - 2] <= 0.0:
                gamma[i - 2] += need
            else:  # pragma: no cover - presolve guarantees one of the rows above
                raise AssertionError("no zero-rhs row available for eliminated slot")
        else:
            need = grad0 - _coverage_tail(current, params, i)
            if need <= 0.0:
                continue
            j = i - M - 1
            if tail_rhs[j] > 0.0:  # pragma: no cover
                raise AssertionError("eliminated tail slot without a zero-rhs row")
            delta[j] += need
    return DualSet(theta=theta, lam=lam, gamma=gamma, delta=delta, mu=mu)


def solve_primal(params, chan, sched, tol=1e-8, max_iter=_MAX_ITER_DEFAULT):
    """Optimal powers plus multipliers for a fixed schedule.

    tol is the acceptance bar on the duality gap per variable; the solver
    drives the gap several orders below it when the arithmetic allows. The
    problem is always feasible (zero power satisfies every row), so there is
    no infeasible outcome. Raises ConvergenceError past ``max_iter``.
    """
    check_dims(params, chan, sched)
    if tol <= 0:
        raise InstanceError("tol must be positive")
    num, den = _gain_floors(params, chan)
    system = _RowSystem(params, chan, sched)
    forced = _forced_zero_mask(system, num)
    free = np.flatnonzero(~forced)

    p_full = np.zeros(params.N)
    iterations = 0
    if free.size:
        G_red = system.G[:, free]
        keep = np.flatnonzero(np.abs(G_red).sum(axis=1) > 0.0)
        G_red = G_red[keep]
        w_red = system.w[keep]
        mu_target = min(tol * 1e-5, 1e-13)
        p_red, z_red, iterations, _ = _interior_point(
            num[free], den[free], G_red, w_red, mu_target, 1e-10, max_iter
        )
        p_full[free] = np.where(p_red < 1e-11, 0.0, p_red)
        row_duals = np.zeros(system.G.shape[0])
        row_duals[keep] = np.maximum(z_red, 0.0)
    else:
        row_duals = np.zeros(system.G.shape[0])

    duals = system.duals_from_rows(row_duals)
    duals = _backfill_duals(params, chan, system, duals, forced, num, den)

    allocation = PowerAllocation.from_powers(params, chan, p_full)
    solution = PrimalSolution(
        allocation=allocation, duals=duals, kkt_residual=0.0, iterations=iterations
    )
    residual = kkt_check(params, chan, sched, solution)
    return PrimalSolution(
        allocation=allocation,
        duals=duals,
        kkt_residual=residual,
        iterations=iterations,
    )


def _p2_slack_arrays(params, chan, sched, p_s):
    """Slacks of every row family, as arrays keyed like the dual set."""
    M, N = params.M, params.N
    I = sched.I_H.astype(np.float64)
    spent = np.cumsum(p_s)
    harvested = params.alpha * params.p_p * np.cumsum(I) if M else np.zeros(0)
    total = params.E0 + (harvested[-1] if M >= 1 else 0.0)
    out = {}
    out["theta"] = (
        np.array([(1.0 - I[0]) * params.E0 - p_s[0]]) if M >= 1 else np.zeros(0)
    )
    cap = params.harvest_cap
    out["lam"] = (
        (1.0 - I[1:M]) * cap - p_s[1:M] if M >= 2 else np.zeros(0)
    )
    out["gamma"] = (
        params.E0 + harvested[: M - 1] - spent[1:M] if M >= 2 else np.zeros(0)
    )
    out["delta"] = total - spent[M:N]
    out["mu"] = params.P_int - chan.h_sp * p_s[:M]
    return out


def kkt_check(params, chan, sched, sol):
    """Worst violation among stationarity, complementarity, and feasibility.

    Stationarity is checked two-sided on transmitting slots and one-sided on
    silent ones, which stands in for the dropped nonnegativity multipliers.
    """
    p = check_dims(params, chan, sched, sol.allocation.p_s)
    duals = sol.duals
    duals.validate_shape(params)
    M, N = params.M, params.N
    num, den = _gain_floors(params, chan)

    worst = 0.0
    gamma_tail = np.concatenate([np.cumsum(duals.gamma[::-1])[::-1], [0.0]])
    delta_sum = float(duals.delta.sum())
    delta_tail = np.concatenate([np.cumsum(duals.delta[::-1])[::-1], [0.0]])
    for idx in range(N):
        i = idx + 1
        grad = num[idx] / (den[idx] + num[idx] * p[idx])
        if i <= M:
            local = duals.theta if i == 1 else float(duals.lam[i - 2])
            level = (
                local
                + float(duals.mu[idx]) * float(chan.h_sp[idx])
                + float(gamma_tail[max(i - 2, 0)])
                + delta_sum
            )
        else:
            level = float(delta_tail[i - M - 1])
        if p[idx] > ZERO_POWER:
            worst = max(worst, abs(grad - level))
        else:
            worst = max(worst, grad - level)  # one-sided at the boundary

    slacks = _p2_slack_arrays(params, chan, sched, p)
    for name, mult in (
        ("theta", np.array([duals.theta]) if M >= 1 else np.zeros(0)),
        ("lam", duals.lam),
        ("gamma", duals.gamma),
        ("delta", duals.delta),
        ("mu", duals.mu),
    ):
        sl = slacks[name]
        if sl.size:
            worst = max(worst, float(np.max(np.abs(mult * sl))))  # complementarity
            worst = max(worst, float(np.max(-sl)))  # primal feasibility
    if np.any(p < 0):
        worst = max(worst, float(np.max(-p)))
    return float(worst)


def waterfill_from_duals(params, chan, duals):
    """Closed-form powers from the multipliers: clipped water level minus the
    per-slot floor. Slots with a dead direct link get zero; a nonpositive
    level aggregate on a live slot is inconsistent and raises."""
    check_dims(params, chan)
    duals.validate_shape(params)
    M, N = params.M, params.N
    num, den = _gain_floors(params, chan)
    p = np.zeros(N)
    for idx in range(N):
        i = idx + 1
        if num[idx] <= 0.0:
            continue
        level = (
            _coverage_head(duals, chan, i) if i <= M else _coverage_tail(duals, params, i)
        )
        if level <= 0.0:
            raise UnboundedLevelError(
                f"slot {i}: level aggregate {level} is nonpositive with a live link"
            )
        p[idx] = max(0.0, 1.0 / level - den[idx] / num[idx])
    return p
