"""Channel generation, Monte-Carlo sweeps, and CSV persistence.

Reproducibility contract: every random draw comes from a Philox4x64-10
generator. Channel realizations derive their keys from (seed, trial, attempt)
plus a per-vector lane through splitmix64, so any trial can be regenerated in
isolation, a worker pool never changes an output byte, and the grid points of
a sweep compare policies on common random numbers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import Generator, Philox

from .baselines import greedy_myopic_policy
from .errors import EhcrError, InstanceError, SweepError, UsageError
from .gbd import solve_gbd
from .model import ChannelRealization, ScenarioParams

logger = logging.getLogger("ehcr")

RNG_ALGORITHM = "philox4x64-10"

SWEEP_VARIABLES = ("P_int", "N", "p_p", "channel_profile", "alpha")

CSV_HEADER = (
    "x_value,mean_rate_opt,mean_rate_greedy,mean_eh_slots,mean_tx_slots,"
    "mean_iters,trials,seed,sem_rate_opt,sem_rate_greedy"
)

_MASK64 = (1 << 64) - 1


def splitmix64(*parts):
    """Deterministic 64-bit mix of integers; the per-trial key derivation."""
    x = 0
    for part in parts:
        x = (x + int(part)) & _MASK64
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


@dataclass(frozen=True)
class ChannelStatistics:
    """Means of the exponential power-gain draws per link (Rayleigh fading).

    var_pp is carried for completeness; the licensed-to-licensed gain never
    enters the secondary's objective or constraints.
    """

    var_pp: float = 0.1
    var_ps: float = 0.1
    var_sp: float = 0.1
    var_ss: float = 0.1

    def __post_init__(self):
        for name in ("var_pp", "var_ps", "var_sp", "var_ss"):
            value = float(getattr(self, name))
            if not value > 0:
                raise InstanceError(f"{name} must be positive")
            object.__setattr__(self, name, value)


def generate_channel(stats, params, seed):
    """Draw one channel realization; identical seed means identical draws.

    Each gain vector has its own Philox key (lanes 1..3 mixed into the seed),
    so realizations for the same seed share a common prefix when only N or M
    changes, and scale linearly when only the link variances change. Sweeps
    exploit this: grid points see common random numbers.
    """
    lanes = (
        ("h_ss", stats.var_ss, params.N),
        ("h_ps", stats.var_ps, params.M),
        ("h_sp", stats.var_sp, params.M),
    )
    draws = {}
    for lane, (name, mean, count) in enumerate(lanes, start=1):
        rng = Generator(Philox(key=np.uint64(splitmix64(seed, lane))))
        draws[name] = rng.exponential(mean, count)
    return ChannelRealization(**draws)


@dataclass(frozen=True)
class ChannelProfile:
    name: str
    var_ss: float
    var_sp: float
    var_ps: float

    def apply(self, stats):
        return replace(stats, var_ss=self.var_ss, var_sp=self.var_sp, var_ps=self.var_ps)


@dataclass(frozen=True)
class SweepSpec:
    """One Monte-Carlo sweep: a variable, its grid, and the fixed context."""

    variable: str
    grid: tuple
    params: ScenarioParams
    stats: ChannelStatistics = field(default_factory=ChannelStatistics)
    trials: int = 500
    seed: int = 0
    epsilon: float = 1e-4

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise UsageError(
                f"unknown sweep variable {self.variable!r}; expected one of {SWEEP_VARIABLES}"
            )
        grid = tuple(self.grid)
        if not grid:
            raise UsageError("sweep grid must be nonempty")
        if self.variable != "channel_profile":
            values = [float(v) for v in grid]
            if values != sorted(values):
                raise UsageError("sweep grid must be sorted ascending")
            grid = tuple(values)
        else:
            for entry in grid:
                if not isinstance(entry, ChannelProfile):
                    raise UsageError("channel_profile grid entries must be ChannelProfile")
        object.__setattr__(self, "grid", grid)
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if self.epsilon <= 0:
            raise UsageError("epsilon must be positive")
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SweepRow:
    x_value: float
    mean_rate_opt: float
    mean_rate_greedy: float
    mean_eh_slots: float
    mean_tx_slots: float
    mean_iters: float
    trials: int
    seed: int
    sem_rate_opt: float
    sem_rate_greedy: float


def _materialize_point(spec, point_idx):
    """Fixed params/stats for one grid point, plus its numeric x value."""
    params, stats = spec.params, spec.stats
    value = spec.grid[point_idx]
    if spec.variable == "P_int":
        return replace(params, P_int=float(value)), stats, float(value)
    if spec.variable == "p_p":
        return replace(params, p_p=float(value)), stats, float(value)
    if spec.variable == "alpha":
        return replace(params, alpha=float(value)), stats, float(value)
    if spec.variable == "N":
        n = int(value)
        offset = spec.params.N - spec.params.M
        m = n - offset
        if m < 0 or n < 1:
            raise UsageError(f"N={n} with active-slot offset {offset} is infeasible")
        return replace(params, N=n, M=m), stats, float(n)
    # channel_profile: x is the grid index
    return params, value.apply(stats), float(point_idx)


def _run_trial(task):
    """One Monte-Carlo trial; resamples once on an instance-level failure.

    The channel seed is keyed by the trial alone, not the grid point, so a
    sweep compares policies on common random numbers across its grid.
    """
    params, stats, epsilon, seed, point_idx, trial_idx = task
    last_error = None
    for attempt in (0, 1):
        chan_seed = splitmix64(seed, trial_idx, attempt)
        gbd_seed = splitmix64(seed, point_idx, trial_idx, 2 + attempt)
        try:
            chan = generate_channel(stats, params, chan_seed)
            policy, trace = solve_gbd(params, chan, epsilon=epsilon, seed=gbd_seed)
            greedy = greedy_myopic_policy(params, chan)
        except EhcrError as exc:
            logger.warning(
                "trial failed (point %d, trial %d, attempt %d): %s",
                point_idx, trial_idx, attempt, exc,
            )
            last_error = exc
            continue
        eh_slots = float(np.sum(policy.schedule.I_H))
        return (
            policy.allocation.objective,
            greedy.allocation.objective,
            eh_slots,
            float(params.M) - eh_slots,
            float(policy.iterations),
        )
    raise SweepError(
        f"two consecutive failures at point {point_idx}, trial {trial_idx} "
        f"(seed {seed}): {last_error}"
    )


def run_sweep(spec, workers=1):
    """Monte-Carlo averages per grid point. Worker count never changes the
    result: trials are keyed by their index and reduced in index order."""
    rows = []
    for point_idx in range(len(spec.grid)):
        params, stats, x_value = _materialize_point(spec, point_idx)
        tasks = [
            (params, stats, spec.epsilon, spec.seed, point_idx, t)
            for t in range(spec.trials)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_trial, tasks, chunksize=8))
        else:
            results = [_run_trial(t) for t in tasks]
        data = np.array(results)
        n = spec.trials
        sem = data[:, :2].std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(2)
        rows.append(
            SweepRow(
                x_value=x_value,
                mean_rate_opt=float(data[:, 0].mean()),
                mean_rate_greedy=float(data[:, 1].mean()),
                mean_eh_slots=float(data[:, 2].mean()),
                mean_tx_slots=float(data[:, 3].mean()),
                mean_iters=float(data[:, 4].mean()),
                trials=n,
                seed=spec.seed,
                sem_rate_opt=float(sem[0]),
                sem_rate_greedy=float(sem[1]),
            )
        )
    return rows


def sweep_rows_to_csv(rows):
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.x_value!r},{r.mean_rate_opt!r},{r.mean_rate_greedy!r},"
            f"{r.mean_eh_slots!r},{r.mean_tx_slots!r},{r.mean_iters!r},"
            f"{r.trials},{r.seed},{r.sem_rate_opt!r},{r.sem_rate_greedy!r}"
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sweep_rows_to_csv(rows))


# Canonical figure sweeps at the reference operating point: six active slots
# out of ten, unit licensed power, 0.1 noise and link variances.

FIG6_PROFILES = (
    ChannelProfile("strong_direct_weak_cross", var_ss=0.1, var_sp=0.01, var_ps=0.01),
    ChannelProfile("strong_direct_strong_cross", var_ss=0.1, var_sp=0.1, var_ps=0.1),
    ChannelProfile("weak_direct_weak_cross", var_ss=0.01, var_sp=0.01, var_ps=0.01),
    ChannelProfile("weak_direct_strong_cross", var_ss=0.01, var_sp=0.1, var_ps=0.1),
)

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6")


def figure_spec(fig_id, trials=500, seed=7, epsilon=1e-4):
    """Built-in sweep behind each figure CSV.

    fig2: harvest/transmit slot counts versus the interference cap.
    fig3: rate versus the interference cap with active slots at N - 2.
    fig4: optimal versus greedy rate as the horizon grows, empty battery.
    fig5: rate versus the licensed transmit power.
    fig6: rate across strong/weak link-quality profiles.
    """
    stats = ChannelStatistics()
    if fig_id == "fig2":
        params = ScenarioParams(M=6, N=10, E0=2.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
        grid = (1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
        return SweepSpec("P_int", grid, params, stats, trials, seed, epsilon)
    if fig_id == "fig3":
        params = ScenarioParams(M=8, N=10, E0=2.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
        grid = (1e-3, 1e-2, 1e-1, 1.0)
        return SweepSpec("P_int", grid, params, stats, trials, seed, epsilon)
    if fig_id == "fig4":
        params = ScenarioParams(M=4, N=6, E0=0.0, alpha=0.3, p_p=1.0, P_int=0.1, sigma2=0.1)
        grid = (6, 8, 10, 12, 14)
        return SweepSpec("N", grid, params, stats, trials, seed, epsilon)
    if fig_id == "fig5":
        params = ScenarioParams(M=6, N=10, E0=2.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
        grid = (0.5, 1.0, 2.0, 4.0)
        return SweepSpec("p_p", grid, params, stats, trials, seed, epsilon)
    if fig_id == "fig6":
        params = ScenarioParams(M=6, N=10, E0=2.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
        return SweepSpec("channel_profile", FIG6_PROFILES, params, stats, trials, seed, epsilon)
    raise UsageError(f"unknown figure id {fig_id!r}; expected one of {FIGURE_IDS}")


def spec_from_dict(doc):
    """Parse a sweep document: either {"figure": "fig4", ...overrides} or a
    fully inline spec with variable/grid/params."""
    if not isinstance(doc, dict):
        raise InstanceError("sweep spec must be a JSON object")
    overrides = {
        key: doc[key] for key in ("trials", "seed", "epsilon") if key in doc
    }
    if "figure" in doc:
        return figure_spec(doc["figure"], **overrides)
    try:
        params = ScenarioParams(**doc["params"])
        variable = doc["variable"]
        grid = doc["grid"]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"bad sweep spec: {exc}") from exc
    stats = ChannelStatistics(**doc.get("stats", {}))
    if variable == "channel_profile":
        grid = [ChannelProfile(**entry) for entry in grid]
    return SweepSpec(variable, tuple(grid), params, stats, **overrides)
