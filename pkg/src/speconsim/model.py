"""Core domain state shared by the simulator and the scheduling algorithms.

Containers and workers use dense integer ids assigned in submission order;
every iteration over them is in id order, which makes all tie-breaking
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Category(Enum):
    """The three lifecycle stages of a training container."""

    PROGRESSING = "PC"
    WATCHING = "WC"
    CONVERGED = "CC"


@dataclass
class MonitorConfig:
    """Categorization parameters: growth threshold and sampling period."""

    alpha: float = 0.01
    interval: float = 30.0
    read_delay: float = 0.0  # staleness of the shared log store, seconds

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.interval <= 0:
            raise ValueError("interval must be > 0")
        if self.read_delay < 0:
            raise ValueError("read_delay must be >= 0")


@dataclass
class SchedulerConfig:
    """Per-category weights for worker scoring."""

    w_pc: float = 2.0
    w_wc: float = 1.5
    w_cc: float = 1.0
    heartbeat_delay: float = 0.0  # worker -> manager message latency, seconds

    def __post_init__(self):
        if not (self.w_pc > self.w_wc > self.w_cc > 0):
            raise ValueError("weights must satisfy w_pc > w_wc > w_cc > 0")
        if self.heartbeat_delay < 0:
            raise ValueError("heartbeat_delay must be >= 0")


@dataclass
class EvalTrace:
    """Time series of evaluation samples and derived growth values."""

    container: int
    samples: list[tuple[float, float]] = field(default_factory=list)  # (t, raw E)
    growths: list[tuple[float, float]] = field(default_factory=list)  # (t, normalized G)


@dataclass
class ContainerState:
    """One training job: identity, placement, progress, category, flags."""

    id: int
    host: int
    model_profile: str
    total_iterations: int
    cpu_demand: float
    iter_rate: float  # iterations/second when granted the full cpu_demand
    submitted_at: float
    completed_iterations: float = 0.0
    category: Category = Category.PROGRESSING
    migrated: bool = False
    rebalanced: bool = False
    converged_at: float | None = None  # set when migrated flips true
    completed_at: float | None = None
    in_flight: bool = False  # checkpoint transfer in progress; no CPU, no progress
    n_migrations: int = 0  # physical moves actually performed
    trace: EvalTrace = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.trace is None:
            self.trace = EvalTrace(self.id)

    @property
    def active(self) -> bool:
        return self.completed_at is None

    def mark_migrated(self, t: float) -> None:
        """Flip the one-way migrated flag and pin the convergence timestamp."""
        if self.migrated:
            raise ValueError(f"container {self.id} already marked migrated")
        self.migrated = True
        self.converged_at = t

    def mark_rebalanced(self) -> None:
        if self.rebalanced:
            raise ValueError(f"container {self.id} already rebalanced")
        self.rebalanced = True


@dataclass
class WorkerState:
    """One worker: capacity, residents, and the three category sets."""

    id: int
    cpu_capacity: float
    reserved_fraction: float = 0.2  # share kept back for the platform itself
    residents: set[int] = field(default_factory=set)
    pc_set: set[int] = field(default_factory=set)
    wc_set: set[int] = field(default_factory=set)
    cc_set: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.cpu_capacity <= 0:
            raise ValueError("cpu_capacity must be > 0")
        if not 0 <= self.reserved_fraction < 1:
            raise ValueError("reserved_fraction must be in [0, 1)")

    @property
    def usable_capacity(self) -> float:
        return self.cpu_capacity * (1.0 - self.reserved_fraction)

    def category_set(self, category: Category) -> set[int]:
        return {
            Category.PROGRESSING: self.pc_set,
            Category.WATCHING: self.wc_set,
            Category.CONVERGED: self.cc_set,
        }[category]


@dataclass
class ClusterState:
    """Workers, containers, and the simulation clock."""

    workers: dict[int, WorkerState] = field(default_factory=dict)
    containers: dict[int, ContainerState] = field(default_factory=dict)
    now: float = 0.0

    def worker_ids(self) -> list[int]:
        return sorted(self.workers)

    def active_residents(self, worker: int) -> list[int]:
        """Ids of not-yet-completed residents, in id order."""
        w = self.workers[worker]
        return sorted(c for c in w.residents if self.containers[c].active)

    def add_container(self, container: ContainerState) -> None:
        worker = self.workers[container.host]
        self.containers[container.id] = container
        worker.residents.add(container.id)
        worker.category_set(container.category).add(container.id)

    def set_category(self, container: int, category: Category) -> None:
        c = self.containers[container]
        worker = self.workers[c.host]
        for s in (worker.pc_set, worker.wc_set, worker.cc_set):
            s.discard(container)
        worker.category_set(category).add(container)
        c.category = category

    def move_resident(self, container: int, dest: int) -> None:
        """Re-home a container, carrying its category set membership along."""
        c = self.containers[container]
        src = self.workers[c.host]
        src.residents.discard(container)
        for s in (src.pc_set, src.wc_set, src.cc_set):
            s.discard(container)
        d = self.workers[dest]
        d.residents.add(container)
        d.category_set(c.category).add(container)
        c.host = dest

    def retire(self, container: int) -> None:
        """Drop a completed container from its worker's category sets."""
        c = self.containers[container]
        worker = self.workers[c.host]
        for s in (worker.pc_set, worker.wc_set, worker.cc_set):
            s.discard(container)

    def check_invariants(self) -> None:
        """Category partition and placement consistency; used by tests."""
        seen: set[int] = set()
        for wid, w in self.workers.items():
            active = {c for c in w.residents if self.containers[c].active}
            union = w.pc_set | w.wc_set | w.cc_set
            assert union == active, f"worker {wid}: category union != active residents"
            total = len(w.pc_set) + len(w.wc_set) + len(w.cc_set)
            assert total == len(union), f"worker {wid}: category sets overlap"
            assert not (active & seen), "container resident on two workers"
            seen |= active
            for c in active:
                assert self.containers[c].host == wid
        unplaced = {c for c, st in self.containers.items() if st.active} - seen
        assert not unplaced, f"active containers missing from residents: {unplaced}"


def active_count(cluster: ClusterState, worker: int) -> int:
    """Number of resident, not-yet-completed containers on a worker.

    A container being checkpoint-transferred counts toward its destination.
    """
    return len(cluster.active_residents(worker))


def allocate_cpu(worker: WorkerState, demands: dict[int, float]) -> dict[int, float]:
    """Max-min fair (water-filling) split of the worker's usable capacity.

    Under-capacity demand is granted in full; otherwise the smallest demands
    are satisfied first and the slack is redistributed over the rest.
    """
    for cid, d in demands.items():
        if d <= 0:
            raise ValueError(f"demand for container {cid} must be > 0")
    usable = worker.usable_capacity
    if sum(demands.values()) <= usable:
        return dict(demands)
    alloc: dict[int, float] = {}
    remaining = usable
    pending = sorted(demands.items(), key=lambda kv: (kv[1], kv[0]))
    left = len(pending)
    for cid, d in pending:
        grant = min(d, remaining / left)
        alloc[cid] = grant
        remaining -= grant
        left -= 1
    return alloc


def running_demands(cluster: ClusterState, worker: int) -> dict[int, float]:
    """CPU demands of active residents that are not paused for a checkpoint."""
    return {
        cid: cluster.containers[cid].cpu_demand
        for cid in cluster.active_residents(worker)
        if not cluster.containers[cid].in_flight
    }


def resource_consumption(cluster: ClusterState, worker: int) -> float:
    """Fraction of the worker's total CPU consumed by its running containers.

    Never exceeds 1 - reserved_fraction because allocations are clipped to the
    usable capacity.
    """
    w = cluster.workers[worker]
    demands = running_demands(cluster, worker)
    if not demands:
        return 0.0
    return sum(allocate_cpu(w, demands).values()) / w.cpu_capacity
