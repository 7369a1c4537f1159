"""Problem instances, schedules, power allocations, and feasibility checks.

A scenario covers N unit-length slots. The licensed transmitter is active in
the first M slots; there the secondary either harvests RF energy (indicator 1)
or transmits under an interference cap. In the remaining N - M slots it can
only transmit. Powers and energies are interchangeable because the slot
length is fixed to one second.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceError

# Absolute tolerance on constraint slacks; every module reuses this value.
FEAS_TOL = 1e-9

LN2 = math.log(2.0)


def _as_gain_vector(name, values):
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise InstanceError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InstanceError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise InstanceError(f"{name} contains negative entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScenarioParams:
    """Static problem instance.

    M: number of slots with the licensed user active (0 <= M <= N).
    N: total number of secondary slots (>= 1).
    E0: initial battery energy in joules.
    alpha: harvesting efficiency in [0, 1].
    p_p: licensed transmit power in watts, constant over the first M slots.
    P_int: per-slot interference cap at the licensed receiver, watts.
    sigma2: receiver noise variance, watts (> 0).
    tau: slot length in seconds; only 1.0 is supported.
    """

    M: int
    N: int
    E0: float
    alpha: float
    p_p: float
    P_int: float
    sigma2: float
    tau: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N:
            raise InstanceError("M and N must be integers")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        if self.N < 1:
            raise InstanceError("N must be at least 1")
        if self.M < 0:
            raise InstanceError("M must be nonnegative")
        if self.M > self.N:
            raise InstanceError(
                f"M={self.M} exceeds N={self.N}: instances with more active-primary "
                "slots than total slots are not supported"
            )
        for name in ("E0", "alpha", "p_p", "P_int", "sigma2", "tau"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InstanceError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.E0 < 0:
            raise InstanceError("E0 must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise InstanceError("alpha must lie in [0, 1]")
        if self.p_p < 0:
            raise InstanceError("p_p must be nonnegative")
        if self.P_int < 0:
            raise InstanceError("P_int must be nonnegative")
        if self.sigma2 <= 0:
            raise InstanceError("sigma2 must be positive")
        if self.tau != 1.0:
            raise InstanceError("only tau = 1.0 is supported")

    @property
    def harvest_cap(self):
        """Loose upper bound E0 + M * p_p used by the per-slot lock constraint."""
        return self.E0 + self.M * self.p_p


@dataclass(frozen=True)
class ChannelRealization:
    """Per-slot power gains: direct link (N), cross links (M each)."""

    h_ss: np.ndarray  # secondary TX -> secondary RX, length N
    h_ps: np.ndarray  # licensed TX -> secondary RX, length M
    h_sp: np.ndarray  # secondary TX -> licensed RX, length M

    def __post_init__(self):
        object.__setattr__(self, "h_ss", _as_gain_vector("h_ss", self.h_ss))
        object.__setattr__(self, "h_ps", _as_gain_vector("h_ps", self.h_ps))
        object.__setattr__(self, "h_sp", _as_gain_vector("h_sp", self.h_sp))
        if len(self.h_ps) != len(self.h_sp):
            raise InstanceError("h_ps and h_sp must have equal length")


@dataclass(frozen=True)
class Schedule:
    """Binary harvest indicators over the first M slots (1 = harvest)."""

    I_H: np.ndarray

    def __post_init__(self):
        arr = np.array(self.I_H, copy=True)
        if arr.ndim != 1:
            raise InstanceError("I_H must be a 1-D vector")
        if arr.size and not np.all(np.isin(arr, (0, 1))):
            raise InstanceError("I_H entries must be 0 or 1")
        arr = arr.astype(np.int8)
        arr.flags.writeable = False
        object.__setattr__(self, "I_H", arr)

    def as_tuple(self):
        return tuple(int(b) for b in self.I_H)

    def bits(self):
        """Compact string form, e.g. '0110'."""
        return "".join(str(int(b)) for b in self.I_H)


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers over all N slots plus the rate they achieve."""

    p_s: np.ndarray
    objective: float  # bits/s/Hz

    def __post_init__(self):
        arr = np.array(self.p_s, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise InstanceError("p_s must be a 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise InstanceError("p_s contains non-finite entries")
        if np.any(arr < 0):
            raise InstanceError("p_s contains negative entries")
        arr.flags.writeable = False
        object.__setattr__(self, "p_s", arr)
        object.__setattr__(self, "objective", float(self.objective))

    @staticmethod
    def from_powers(params, chan, p_s):
        """Build an allocation, computing the objective from the powers."""
        return PowerAllocation(p_s=p_s, objective=rate(params, chan, p_s))


def check_dims(params, chan, sched=None, p_s=None):
    """Validate that channel/schedule/power vectors match the instance shape."""
    if len(chan.h_ss) != params.N:
        raise InstanceError(f"h_ss has length {len(chan.h_ss)}, expected N={params.N}")
    if len(chan.h_ps) != params.M:
        raise InstanceError(f"h_ps has length {len(chan.h_ps)}, expected M={params.M}")
    if len(chan.h_sp) != params.M:
        raise InstanceError(f"h_sp has length {len(chan.h_sp)}, expected M={params.M}")
    if sched is not None and len(sched.I_H) != params.M:
        raise InstanceError(f"schedule has length {len(sched.I_H)}, expected M={params.M}")
    if p_s is not None:
        arr = np.asarray(p_s, dtype=np.float64)
        if arr.ndim != 1 or len(arr) != params.N:
            raise InstanceError(f"p_s has shape {arr.shape}, expected ({params.N},)")
        return arr
    return None


def _snr_terms(params, chan, p_s):
    M = params.M
    head = chan.h_ss[:M] * p_s[:M] / (params.sigma2 + chan.h_ps * params.p_p)
    tail = chan.h_ss[M:] * p_s[M:] / params.sigma2
    return head, tail


def rate(params, chan, p_s):
    """Achievable rate sum in bits/s/Hz for the given transmit powers.

    The first M slots see interference from the licensed transmitter in the
    denominator; the remaining slots see noise only. Slots forced silent by a
    harvest decision simply carry zero power.
    """
    p_s = check_dims(params, chan, p_s=p_s)
    if not np.all(np.isfinite(p_s)):
        raise InstanceError("p_s contains non-finite entries")
    if np.any(p_s < 0):
        raise InstanceError("p_s contains negative entries")
    head, tail = _snr_terms(params, chan, p_s)
    return float(np.sum(np.log2(1.0 + head)) + np.sum(np.log2(1.0 + tail)))


def rate_nats(params, chan, p_s):
    """Natural-log variant of :func:`rate`, used by the dual machinery."""
    p_s = check_dims(params, chan, p_s=p_s)
    head, tail = _snr_terms(params, chan, p_s)
    return float(np.sum(np.log1p(head)) + np.sum(np.log1p(tail)))


@dataclass(frozen=True)
class ConstraintSlack:
    family: str
    index: int  # 1-based slot or prefix index within the family
    slack: float


@dataclass(frozen=True)
class FeasibilityReport:
    """Signed slacks of every constraint; nonnegative slack means satisfied."""

    slacks: tuple

    @property
    def min_slack(self):
        return min((s.slack for s in self.slacks), default=0.0)

    @property
    def feasible(self):
        return self.min_slack >= -FEAS_TOL

    def worst(self):
        return min(self.slacks, key=lambda s: s.slack, default=None)

    def by_family(self, family):
        return [s for s in self.slacks if s.family == family]


def check_feasible_P1(params, chan, sched, p_s):
    """Slack report against the native formulation.

    Families: ``budget_first`` (slot-1 spend vs initial energy),
    ``causality_head`` (cumulative spend in slots 2..M), ``causality_tail``
    (cumulative spend past slot M), ``interference`` (per-slot cap at the
    licensed receiver), ``nonnegativity``.
    """
    p_s = check_dims(params, chan, sched, p_s)
    M, N = params.M, params.N
    I = sched.I_H.astype(np.float64)
    active = (1.0 - I) * p_s[:M]
    slacks = []
    if M >= 1:
        slacks.append(ConstraintSlack("budget_first", 1, float(params.E0 - active[0])))
    harvested = params.alpha * params.p_p * np.cumsum(I)
    spent_head = np.cumsum(active)
    for i in range(2, M + 1):
        rhs = params.E0 + harvested[i - 2]
        slacks.append(ConstraintSlack("causality_head", i, float(rhs - spent_head[i - 1])))
    total_harvest = params.E0 + (harvested[-1] if M >= 1 else 0.0)
    head_spend = spent_head[-1] if M >= 1 else 0.0
    tail_spend = np.cumsum(p_s[M:])
    for i in range(M + 1, N + 1):
        slacks.append(
            ConstraintSlack(
                "causality_tail", i, float(total_harvest - head_spend - tail_spend[i - M - 1])
            )
        )
    for i in range(1, M + 1):
        slack = params.P_int - (1.0 - I[i - 1]) * chan.h_sp[i - 1] * p_s[i - 1]
        slacks.append(ConstraintSlack("interference", i, float(slack)))
    for i in range(1, N + 1):
        slacks.append(ConstraintSlack("nonnegativity", i, float(p_s[i - 1])))
    return FeasibilityReport(tuple(slacks))


def check_feasible_P2(params, chan, sched, p_s):
    """Slack report against the convexified formulation.

    Identical budgets to :func:`check_feasible_P1`, but powers enter without
    the harvest indicator. Harvest slots are silenced by ``budget_first`` /
    ``harvest_lock`` whose right-hand side collapses to zero, and the lock
    bound E0 + M * p_p is vacuous for transmitting slots.
    """
    p_s = check_dims(params, chan, sched, p_s)
    M, N = params.M, params.N
    I = sched.I_H.astype(np.float64)
    slacks = []
    if M >= 1:
        slacks.append(
            ConstraintSlack("budget_first", 1, float((1.0 - I[0]) * params.E0 - p_s[0]))
        )
    cap = params.harvest_cap
    for i in range(2, M + 1):
        slacks.append(
            ConstraintSlack("harvest_lock", i, float((1.0 - I[i - 1]) * cap - p_s[i - 1]))
        )
    harvested = params.alpha * params.p_p * np.cumsum(I)
    spent = np.cumsum(p_s)
    for i in range(2, M + 1):
        rhs = params.E0 + harvested[i - 2]
        slacks.append(ConstraintSlack("causality_head", i, float(rhs - spent[i - 1])))
    total_harvest = params.E0 + (harvested[-1] if M >= 1 else 0.0)
    for j in range(1, N - M + 1):
        slacks.append(
            ConstraintSlack("causality_tail", j, float(total_harvest - spent[M + j - 1]))
        )
    for i in range(1, M + 1):
        slacks.append(
            ConstraintSlack(
                "interference", i, float(params.P_int - chan.h_sp[i - 1] * p_s[i - 1])
            )
        )
    for i in range(1, N + 1):
        slacks.append(ConstraintSlack("nonnegativity", i, float(p_s[i - 1])))
    return FeasibilityReport(tuple(slacks))


def objective_P1(params, chan, sched, p_s):
    """Rate sum with harvest slots explicitly masked out (the native objective)."""
    p_s = check_dims(params, chan, sched, p_s)
    M = params.M
    mask = 1.0 - sched.I_H.astype(np.float64)
    head, tail = _snr_terms(params, chan, p_s)
    return float(np.sum(mask * np.log2(1.0 + head)) + np.sum(np.log2(1.0 + tail)))


def params_to_dict(params):
    return {
        "M": params.M,
        "N": params.N,
        "E0": params.E0,
        "alpha": params.alpha,
        "p_p": params.p_p,
        "P_int": params.P_int,
        "sigma2": params.sigma2,
        "tau": params.tau,
    }


def instance_to_dict(params, chan):
    return {
        "params": params_to_dict(params),
        "channel": {
            "h_ss": [float(x) for x in chan.h_ss],
            "h_ps": [float(x) for x in chan.h_ps],
            "h_sp": [float(x) for x in chan.h_sp],
        },
    }


def instance_from_dict(doc):
    """Parse the canonical instance document {"params": ..., "channel": ...}."""
    try:
        raw_params = doc["params"]
        raw_chan = doc["channel"]
    except (TypeError, KeyError) as exc:
        raise InstanceError(f"instance document missing section: {exc}") from exc
    try:
        params = ScenarioParams(**raw_params)
    except TypeError as exc:
        raise InstanceError(f"bad params section: {exc}") from exc
    try:
        chan = ChannelRealization(
            h_ss=raw_chan["h_ss"], h_ps=raw_chan["h_ps"], h_sp=raw_chan["h_sp"]
        )
    except (TypeError, KeyError) as exc:
        raise InstanceError(f"bad channel section: {exc}") from exc
    check_dims(params, chan)
    return params, chan


def load_instance(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: not valid JSON: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(path, params, chan):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(params, chan), fh, indent=2)
        fh.write("\n")
