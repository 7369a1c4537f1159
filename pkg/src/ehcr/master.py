"""Optimality cuts and the schedule master problem.

Each primal solve yields an affine over-estimator (in the harvest indicators)
of the value any schedule can achieve: the fixed powers and multipliers are a
saddle certificate, and only the constraint right-hand sides depend on the
indicators. The master maximizes a level variable under all cuts collected so
far over binary schedules, by branch-and-bound on the box relaxation, with an
exhaustive enumerator as the reference implementation.

Cut and level values live on the natural-log rate scale of the multipliers;
the decomposition loop converts its bound bookkeeping to bits.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, UsageError
from .model import Schedule, rate_nats
from .simplex import box_epigraph_max

_NODE_CAP_DFS = 10_000  # depth-first until here, then best-bound


@dataclass(frozen=True)
class BendersCut:
    """value(I) <= c0 + c . I for every binary schedule I (natural-log units)."""

    c0: float
    c: np.ndarray

    def __post_init__(self):
        arr = np.array(self.c, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise UsageError("cut coefficients must be a 1-D vector")
        arr.flags.writeable = False
        object.__setattr__(self, "c", arr)
        object.__setattr__(self, "c0", float(self.c0))

    def evaluate(self, I_H):
        return self.c0 + float(self.c @ np.asarray(I_H, dtype=np.float64))

    def to_dict(self):
        return {"c0": self.c0, "c": [float(x) for x in self.c]}

    @staticmethod
    def from_dict(doc):
        return BendersCut(c0=doc["c0"], c=doc["c"])


@dataclass(frozen=True)
class MasterSolution:
    t: float
    I_H: Schedule
    node_count: int


def build_cut(params, chan, sol):
    """Collect the saddle value of a primal solution into an affine cut.

    The constant gathers the objective plus every multiplier-weighted slack
    at zero indicators; each indicator coefficient gathers the terms its flip
    adds: minus its own budget or lock bound, plus the harvested energy in
    every cumulative row that covers later slots.
    """
    M = params.M
    p = sol.allocation.p_s
    d = sol.duals
    f = rate_nats(params, chan, p)
    spent = np.cumsum(p)

    c0 = f
    c = np.zeros(M)
    if M >= 1:
        c0 += d.theta * (params.E0 - p[0])
        c[0] -= d.theta * params.E0
        c0 += float(np.sum(d.mu * (params.P_int - chan.h_sp * p[:M])))
    cap = params.harvest_cap
    harvest_gain = params.alpha * params.p_p
    for j in range(M - 1):  # lock rows for slots 2..M
        c0 += d.lam[j] * (cap - p[j + 1])
        c[j + 1] -= d.lam[j] * cap
    for j in range(M - 1):  # head causality, prefix j+2
        c0 += d.gamma[j] * (params.E0 - spent[j + 1])
        c[: j + 1] += d.gamma[j] * harvest_gain
    for j in range(params.N - M):  # tail causality, prefix M+j+1
        c0 += d.delta[j] * (params.E0 - spent[M + j])
        c[:M] += d.delta[j] * harvest_gain
    return BendersCut(c0=c0, c=c)


def _cut_arrays(cuts, M):
    if not cuts:
        raise UsageError("master problem needs at least one cut")
    for cut in cuts:
        if len(cut.c) != M:
            raise UsageError(f"cut has {len(cut.c)} coefficients, expected M={M}")
    c0 = np.array([cut.c0 for cut in cuts])
    C = np.array([cut.c for cut in cuts]).reshape(len(cuts), M)
    return c0, C


def _leaf_value(c0, C, bits):
    return float(np.min(c0 + C @ bits))


def solve_master_exhaustive(cuts, M):
    """Exact optimum by scanning all 2^M schedules (lexicographic order, so
    the first maximum is also the tie-break winner). Guarded at M <= 24."""
    if M > 24:
        raise CapacityError(f"exhaustive master limited to M <= 24, got {M}")
    c0, C = _cut_arrays(cuts, M)
    if M == 0:
        return MasterSolution(
            t=max(0.0, float(np.min(c0))), I_H=Schedule(I_H=np.zeros(0, dtype=np.int8)),
            node_count=1,
        )
    shifts = np.arange(M - 1, -1, -1, dtype=np.uint64)  # slot 1 is the high bit
    best_v = -np.inf
    best_n = 0
    total = 1 << M
    chunk = 1 << 14
    for start in range(0, total, chunk):
        ns = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = ((ns[None, :] >> shifts[:, None]) & 1).astype(np.float64)
        vals = np.min(c0[:, None] + C @ bits, axis=0)
        local = int(np.argmax(vals))
        if vals[local] > best_v:
            best_v = float(vals[local])
            best_n = start + local
    if best_v <= 0.0:
        return MasterSolution(
            t=0.0, I_H=Schedule(I_H=np.zeros(M, dtype=np.int8)), node_count=total
        )
    bits = (best_n >> shifts) & 1
    return MasterSolution(t=best_v, I_H=Schedule(I_H=bits.astype(np.int8)), node_count=total)


def _lex_key(vec):
    return tuple(int(b) for b in vec)


def solve_master(cuts, M, hints=()):
    """Branch-and-bound on the box relaxation of the cut system.

    Depth-first on the most-fractional indicator, switching to best-bound
    after 10^4 nodes. Matches the exhaustive enumerator exactly, including
    the lexicographic tie-break: a subtree is discarded only when it provably
    cannot improve the incumbent and cannot contain a lexicographically
    smaller schedule of equal value. ``hints`` seeds the incumbent with known
    schedules (exact leaf evaluations, so correctness is unaffected).
    """
    c0, C = _cut_arrays(cuts, M)
    if M == 0:
        return MasterSolution(
            t=max(0.0, float(np.min(c0))), I_H=Schedule(I_H=np.zeros(0, dtype=np.int8)),
            node_count=1,
        )

    # Indicators no cut touches never move the bound; the tie-break pins
    # them to zero, which also spares the search from flat subtrees.
    touched = np.any(C != 0.0, axis=0)
    root = np.full(M, -1, dtype=np.int8)
    root[~touched] = 0

    def completion_zeros(fix):
        leaf = fix.copy()
        leaf[leaf < 0] = 0
        return leaf

    best_leaf = completion_zeros(root)
    best_v = _leaf_value(c0, C, best_leaf.astype(np.float64))
    nodes = 0

    def take_leaf(leaf, value):
        nonlocal best_v, best_leaf
        if value > best_v or (value == best_v and _lex_key(leaf) < _lex_key(best_leaf)):
            best_v = value
            best_leaf = leaf.copy()

    for hint in hints:
        leaf = np.asarray(getattr(hint, "I_H", hint), dtype=np.int8)
        if leaf.shape == (M,):
            take_leaf(leaf, _leaf_value(c0, C, leaf.astype(np.float64)))

    def prunable(ub, fix):
        # A subtree goes only when it can neither beat the incumbent nor hold
        # an equal-value schedule that wins the lexicographic tie-break.
        if ub < best_v:
            return True
        return ub <= best_v and _lex_key(completion_zeros(fix)) > _lex_key(best_leaf)

    stack = [(np.inf, root)]  # (inherited bound, fixings)
    heap_mode = False
    while stack:
        if heap_mode:
            neg_inherited, _, fix = heapq.heappop(stack)
            inherited = -neg_inherited
        else:
            inherited, fix = stack.pop()
        nodes += 1
        # the parent relaxation already bounds this subtree
        if prunable(inherited, fix):
            continue
        free = np.flatnonzero(fix < 0)
        if free.size == 0:
            take_leaf(fix, _leaf_value(c0, C, fix.astype(np.float64)))
            continue
        ones = fix == 1
        c0_eff = c0 + C[:, ones].sum(axis=1) if np.any(ones) else c0
        C_free = C[:, free]
        # one-cut bound: cheap, valid, and often enough to prune without an LP
        cheap = float(np.min(c0_eff + np.maximum(C_free, 0.0).sum(axis=1)))
        if prunable(cheap + 1e-9 * (1.0 + abs(cheap)), fix):
            continue
        lp_value, x = box_epigraph_max(c0_eff, C_free)
        ub = lp_value + 1e-9 * (1.0 + abs(lp_value))
        if prunable(ub, fix):
            continue
        # rounding the relaxation gives a free incumbent candidate
        leaf = fix.copy()
        leaf[free] = (x > 0.5).astype(np.int8)
        take_leaf(leaf, _leaf_value(c0, C, leaf.astype(np.float64)))
        if prunable(ub, fix):
            continue
        frac = np.minimum(x, 1.0 - x)
        branch = int(free[np.argmax(frac)])
        for value in (1, 0):  # LIFO: the zero child is explored first
            child = fix.copy()
            child[branch] = value
            if heap_mode:
                heapq.heappush(stack, (-ub, nodes * 2 + value, child))
            else:
                stack.append((ub, child))
        if not heap_mode and nodes >= _NODE_CAP_DFS:
            heap_mode = True
            stack = [(-prio, idx, fx) for idx, (prio, fx) in enumerate(stack)]
            heapq.heapify(stack)

    if best_v <= 0.0:
        return MasterSolution(
            t=0.0, I_H=Schedule(I_H=np.zeros(M, dtype=np.int8)), node_count=nodes
        )
    return MasterSolution(
        t=best_v, I_H=Schedule(I_H=best_leaf.astype(np.int8)), node_count=nodes
    )
