"""Offline harvest-or-transmit scheduling for an energy-harvesting underlay
cognitive radio link: convex power subproblem, Benders-style schedule master,
the alternating decomposition loop, reference policies, and a Monte-Carlo
experiment harness."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConvergenceError,
    EhcrError,
    InstanceError,
    SweepError,
    UnboundedLevelError,
    UsageError,
)
from .model import (
    FEAS_TOL,
    ChannelRealization,
    FeasibilityReport,
    PowerAllocation,
    ScenarioParams,
    Schedule,
    check_feasible_P1,
    check_feasible_P2,
    load_instance,
    objective_P1,
    rate,
    rate_nats,
    save_instance,
)
from .primal import (
    DualSet,
    PrimalSolution,
    kkt_check,
    solve_primal,
    waterfill_from_duals,
)
from .master import (
    BendersCut,
    MasterSolution,
    build_cut,
    solve_master,
    solve_master_exhaustive,
)
from .gbd import (
    BoundCheckReport,
    GbdTrace,
    IterationRecord,
    OptimalPolicy,
    bound_history_check,
    solve_gbd,
    trace_to_csv,
)
from .baselines import exhaustive_policy_oracle, greedy_myopic_policy
from .experiments import (
    ChannelProfile,
    ChannelStatistics,
    SweepRow,
    SweepSpec,
    figure_spec,
    generate_channel,
    run_sweep,
    sweep_rows_to_csv,
    write_sweep_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
