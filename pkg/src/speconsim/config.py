"""Scenario configuration: YAML schema, defaults, and validation.

A scenario file is a nested key/value document; every field has a default, so
an empty file is a valid (if small) scenario.  Unknown keys are rejected to
catch typos early.  See README for the full schema.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .engine import POLICY_DS, POLICY_SPECON, OverheadModel
from .model import MonitorConfig, SchedulerConfig
from .workload import (
    DEFAULT_BASE_ITER_RATE,
    DEFAULT_BUDGET_JITTER,
    DEFAULT_CPU_DEMAND,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_TOTAL_ITERATIONS,
    parse_profile_rule,
)


class ConfigError(ValueError):
    """Scenario file failed validation."""


@dataclass
class ScenarioConfig:
    """Everything that determines a run, bit for bit."""

    label: str = "scenario"
    seed: int = 0
    policy: str = POLICY_SPECON
    # cluster
    n_workers: int = 4
    cpu_capacity: float = 10.0
    reserved_fraction: float = 0.2
    # workload
    n_jobs: int = 20
    profile_rule: str = "single:vae"
    schedule_kind: str = "fixed"
    schedule_interval: float = 50.0
    schedule_window: float = 300.0
    total_iterations: int = DEFAULT_TOTAL_ITERATIONS
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    cpu_demand: float = DEFAULT_CPU_DEMAND
    base_iter_rate: float = DEFAULT_BASE_ITER_RATE
    budget_jitter: float = DEFAULT_BUDGET_JITTER
    # algorithm parameters
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    overhead: OverheadModel = field(default_factory=OverheadModel)

    def validate(self) -> "ScenarioConfig":
        if self.policy not in (POLICY_SPECON, POLICY_DS):
            raise ConfigError(f"policy must be 'specon' or 'ds', got {self.policy!r}")
        if self.n_workers < 1:
            raise ConfigError("n_workers must be >= 1")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        if self.cpu_capacity <= 0:
            raise ConfigError("cpu_capacity must be > 0")
        if not 0 <= self.reserved_fraction < 1:
            raise ConfigError("reserved_fraction must be in [0, 1)")
        if self.schedule_kind not in ("fixed", "random"):
            raise ConfigError(f"schedule kind must be 'fixed' or 'random', got {self.schedule_kind!r}")
        if self.schedule_kind == "fixed" and self.schedule_interval <= 0:
            raise ConfigError("fixed schedule needs interval > 0")
        if self.schedule_kind == "random" and self.schedule_window <= 0:
            raise ConfigError("random schedule needs window > 0")
        if self.total_iterations < 1:
            raise ConfigError("total_iterations must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.cpu_demand <= 0 or self.base_iter_rate <= 0:
            raise ConfigError("cpu_demand and base_iter_rate must be > 0")
        if not 0 <= self.budget_jitter < 1:
            raise ConfigError("budget_jitter must be in [0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        try:
            parse_profile_rule(self.profile_rule)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def replace(self, **kwargs) -> "ScenarioConfig":
        """Copy with scalar overrides (monitor/scheduler/overhead passed whole)."""
        data = {
            **{k: v for k, v in self.__dict__.items()},
            **kwargs,
        }
        return ScenarioConfig(**data).validate()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "seed": self.seed,
            "policy": self.policy,
            "cluster": {
                "n_workers": self.n_workers,
                "cpu_capacity": self.cpu_capacity,
                "reserved_fraction": self.reserved_fraction,
            },
            "workload": {
                "n_jobs": self.n_jobs,
                "profiles": self.profile_rule,
                "schedule": {
                    "kind": self.schedule_kind,
                    "interval": self.schedule_interval,
                    "window": self.schedule_window,
                },
                "total_iterations": self.total_iterations,
                "noise_sigma": self.noise_sigma,
                "cpu_demand": self.cpu_demand,
                "base_iter_rate": self.base_iter_rate,
                "budget_jitter": self.budget_jitter,
            },
            "monitor": asdict(self.monitor),
            "scheduler": asdict(self.scheduler),
            "overhead": asdict(self.overhead),
        }


def _section(data: dict, name: str, allowed: set[str]) -> dict:
    raw = data.pop(name, {}) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return raw


def config_from_dict(data: dict | None) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed document."""
    data = dict(data or {})
    cluster = _section(data, "cluster", {"n_workers", "cpu_capacity", "reserved_fraction"})
    workload = _section(
        data,
        "workload",
        {
            "n_jobs",
            "profiles",
            "schedule",
            "total_iterations",
            "noise_sigma",
            "cpu_demand",
            "base_iter_rate",
            "budget_jitter",
        },
    )
    schedule = workload.pop("schedule", {}) or {}
    unknown = set(schedule) - {"kind", "interval", "window"}
    if unknown:
        raise ConfigError(f"unknown keys in schedule: {sorted(unknown)}")
    monitor = _section(data, "monitor", {"alpha", "interval", "read_delay"})
    scheduler = _section(data, "scheduler", {"w_pc", "w_wc", "w_cc", "heartbeat_delay"})
    overhead = _section(data, "overhead", {"mean", "sd", "lo", "hi"})
    unknown = set(data) - {"label", "seed", "policy"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    defaults = ScenarioConfig()
    try:
        cfg = ScenarioConfig(
            label=str(data.get("label", defaults.label)),
            seed=int(data.get("seed", defaults.seed)),
            policy=str(data.get("policy", defaults.policy)),
            n_workers=int(cluster.get("n_workers", defaults.n_workers)),
            cpu_capacity=float(cluster.get("cpu_capacity", defaults.cpu_capacity)),
            reserved_fraction=float(
                cluster.get("reserved_fraction", defaults.reserved_fraction)
            ),
            n_jobs=int(workload.get("n_jobs", defaults.n_jobs)),
            profile_rule=str(workload.get("profiles", defaults.profile_rule)),
            schedule_kind=str(schedule.get("kind", defaults.schedule_kind)),
            schedule_interval=float(schedule.get("interval", defaults.schedule_interval)),
            schedule_window=float(schedule.get("window", defaults.schedule_window)),
            total_iterations=int(workload.get("total_iterations", defaults.total_iterations)),
            noise_sigma=float(workload.get("noise_sigma", defaults.noise_sigma)),
            cpu_demand=float(workload.get("cpu_demand", defaults.cpu_demand)),
            base_iter_rate=float(workload.get("base_iter_rate", defaults.base_iter_rate)),
            budget_jitter=float(workload.get("budget_jitter", defaults.budget_jitter)),
            monitor=MonitorConfig(
                alpha=float(monitor.get("alpha", 0.01)),
                interval=float(monitor.get("interval", 30.0)),
                read_delay=float(monitor.get("read_delay", 0.0)),
            ),
            scheduler=SchedulerConfig(
                w_pc=float(scheduler.get("w_pc", 2.0)),
                w_wc=float(scheduler.get("w_wc", 1.5)),
                w_cc=float(scheduler.get("w_cc", 1.0)),
                heartbeat_delay=float(scheduler.get("heartbeat_delay", 0.0)),
            ),
            overhead=OverheadModel(
                mean=float(overhead.get("mean", 3.0)),
                sd=float(overhead.get("sd", 1.43)),
                lo=float(overhead.get("lo", 0.5)),
                hi=float(overhead.get("hi", 5.0)),
            ),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse a YAML scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig, path: str | Path) -> None:
    """Write the fully resolved scenario back out for reproducibility."""
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
