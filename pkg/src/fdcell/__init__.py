"""Link-level simulator and optimizer for a full-duplex self-backhauled
small cell: channel realization, per-mode SINR math, closed-form capacity
comparison, weighted sum-rate power allocation and a back-pressure
scheduler driven by a Monte Carlo traffic harness."""

from .capacity import LinkBudget, SweepConfig, c_fd_mode1, c_fd_mode2, c_hd, sweep
from .config import ChannelConfig, RunConfig, TrafficConfig, load_run_config
from .power import PowerProblem, PowerSolution, SolveOptions, optimal_rates, oracle_grid, solve_sp
from .radio import Link, LinkKind, Mode, ModeKind, PowerVector, link_rate, sinr, spectral_efficiency
from .scheduler import (
    PowerCache,
    QueueState,
    ScheduleDecision,
    apply_schedule,
    enumerate_schedules,
    link_weight,
    precompute_equal_weight_powers,
    select_schedule,
    select_schedule_exact,
)
from .sim import Metrics, run, run_drop
from .topology import ChannelState, Topology, drop_topology, path_loss_db, realize_channel

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "ChannelState",
    "Link",
    "LinkBudget",
    "LinkKind",
    "Metrics",
    "Mode",
    "ModeKind",
    "PowerCache",
    "PowerProblem",
    "PowerSolution",
    "PowerVector",
    "QueueState",
    "RunConfig",
    "ScheduleDecision",
    "SolveOptions",
    "SweepConfig",
    "Topology",
    "TrafficConfig",
    "apply_schedule",
    "c_fd_mode1",
    "c_fd_mode2",
    "c_hd",
    "drop_topology",
    "enumerate_schedules",
    "link_rate",
    "link_weight",
    "load_run_config",
    "optimal_rates",
    "oracle_grid",
    "path_loss_db",
    "precompute_equal_weight_powers",
    "realize_channel",
    "run",
    "run_drop",
    "select_schedule",
    "select_schedule_exact",
    "sinr",
    "solve_sp",
    "spectral_efficiency",
    "sweep",
]
