"""Deterministic simulator of speculative container scheduling for training clusters."""

from .config import ConfigError, ScenarioConfig, config_from_dict, load_config
from .engine import (
    OverheadModel,
    RunResult,
    Simulation,
    average_completion,
    completion_time,
    makespan,
)
from .harness import (
    CompareReport,
    RunReport,
    SweepPoint,
    compare_reports,
    compare_scenarios,
    run_scenario,
    sweep,
    write_compare,
    write_report,
    write_sweep,
)
from .model import (
    Category,
    ClusterState,
    ContainerState,
    MonitorConfig,
    SchedulerConfig,
    WorkerState,
    active_count,
    allocate_cpu,
    resource_consumption,
)
from .monitor import ReallocationRequest, WorkerMonitor, growth
from .rebalancer import balance_factor, plan_rebalance
from .scheduler import choose_target, initial_placement, score_workers, select_target
from .workload import (
    ModelProfile,
    SubmissionSchedule,
    calibrate_profile,
    loss_at,
    make_schedule,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
