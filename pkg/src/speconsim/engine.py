"""Discrete-event core: event queue, processor sharing, checkpoint migration.

Time only moves inside advance(); allocations are piecewise constant between
events, so progress integrates exactly.  Job completions are derived (the
earliest zero-remaining instant under current rates) instead of queued, which
sidesteps stale-event invalidation when rates change.
"""

from __future__ import annotations

import functools
import heapq
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .model import (
    ClusterState,
    ContainerState,
    MonitorConfig,
    SchedulerConfig,
    WorkerState,
    active_count,
    allocate_cpu,
    running_demands,
)
from .monitor import ReallocationRequest, WorkerMonitor
from .rebalancer import RebalanceRound, plan_rebalance
from .rng import OVERHEAD, IterationNoise, substream
from .scheduler import Decision, initial_placement, select_target
from .workload import ModelProfile, SubmissionSchedule, loss_at

log = logging.getLogger(__name__)

SUBMISSION = "submission"
CATEGORIZATION_TICK = "categorization_tick"
MIGRATION_START = "migration_start"
MIGRATION_COMPLETE = "migration_complete"
JOB_COMPLETION = "job_completion"
REBALANCE_CHECK = "rebalance_check"
REQUEST_DELIVERY = "request_delivery"  # internal carrier for heartbeat latency

POLICY_SPECON = "specon"
POLICY_DS = "ds"

SPECULATIVE = "speculative"
REBALANCE = "rebalance"

_ITER_EPS = 1e-6  # float slack allowed when snapping a finished job


@dataclass(frozen=True)
class OverheadModel:
    """Checkpoint save+restore delay: a normal draw clipped to hard bounds.

    The configured mean/sd describe the clipped samples themselves; the parent
    normal is moment-matched so the draws actually exhibit those statistics
    (a parent at the literal mean/sd would lose variance to the clipping).
    """

    mean: float = 3.0
    sd: float = 1.43
    lo: float = 0.5
    hi: float = 5.0

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError("need 0 <= lo <= hi")
        if not self.lo <= self.mean <= self.hi:
            raise ValueError("mean must lie within [lo, hi]")
        if self.sd < 0:
            raise ValueError("sd must be >= 0")

    def parent_params(self) -> tuple[float, float]:
        """Parent normal (mu, sigma) whose clipped moments match mean/sd."""
        return _matched_parent(self.mean, self.sd, self.lo, self.hi)

    def sample(self, gen: np.random.Generator) -> float:
        mu, sigma = self.parent_params()
        if sigma == 0.0:
            return mu
        return float(min(max(gen.normal(mu, sigma), self.lo), self.hi))


@functools.lru_cache(maxsize=64)
def _matched_parent(mean: float, sd: float, lo: float, hi: float) -> tuple[float, float]:
    if sd == 0 or lo == hi:
        return mean, 0.0
    feasible = math.sqrt((mean - lo) * (hi - mean))
    if sd >= feasible:
        raise ValueError(f"sd={sd} not attainable on [{lo}, {hi}] with mean {mean}")

    def clipped_moments(mu: float, sigma: float) -> tuple[float, float]:
        a = (lo - mu) / sigma
        b = (hi - mu) / sigma
        pa, pb = stats.norm.cdf(a), stats.norm.sf(b)
        z = stats.norm.cdf(b) - stats.norm.cdf(a)
        if z <= 0:
            return (lo * pa + hi * pb), abs(hi - lo) / 2
        phi_a, phi_b = stats.norm.pdf(a), stats.norm.pdf(b)
        m_t = mu + sigma * (phi_a - phi_b) / z
        v_t = sigma * sigma * (1 + (a * phi_a - b * phi_b) / z - ((phi_a - phi_b) / z) ** 2)
        m = lo * pa + hi * pb + m_t * z
        m2 = lo**2 * pa + hi**2 * pb + (v_t + m_t * m_t) * z
        return m, math.sqrt(max(m2 - m * m, 0.0))

    def residual(p):
        m, s = clipped_moments(p[0], abs(p[1]))
        return [m - mean, s - sd]

    sol, _, ier, msg = optimize.fsolve(residual, [mean, max(sd * 1.25, 1e-3)], full_output=True)
    if ier != 1:
        log.warning("overhead moment match failed (%s); using literal parameters", msg)
        return mean, sd
    return float(sol[0]), abs(float(sol[1]))


@dataclass(frozen=True)
class SimEvent:
    time: float
    seq: int
    kind: str
    container: int = -1
    worker: int = -1
    payload: tuple = ()


@dataclass(frozen=True)
class EventRecord:
    """One line of the append-only event log."""

    time: float
    kind: str
    container: int  # -1 when not container-scoped
    worker: int  # -1 when not worker-scoped
    detail: str = ""


@dataclass(frozen=True)
class MigrationRecord:
    container: int
    source: int
    dest: int
    reason: str
    start: float
    end: float
    delay: float
    iterations_at_start: float
    iterations_at_end: float


@dataclass
class Segment:
    """Cluster state over [t0, t1): per-worker active counts and CPU use."""

    t0: float
    t1: float
    counts: dict[int, int]
    cpu: dict[int, float]  # fraction of total capacity


@dataclass
class RunResult:
    """Everything a finished scenario produced."""

    policy: str
    seed: int
    n_jobs: int
    containers: dict[int, ContainerState]
    events: list[EventRecord]
    decisions: list[Decision]
    rounds: list[RebalanceRound]
    migrations: list[MigrationRecord]
    segments: list[Segment]
    worker_ids: list[int]
    placement: list[int]


def completion_time(result: RunResult, container: int) -> float:
    c = result.containers[container]
    if c.completed_at is None:
        raise ValueError(f"container {container} did not finish")
    return c.completed_at - c.submitted_at


def makespan(result: RunResult) -> float:
    """Time from the first submission to the last completion."""
    ends = [c.completed_at for c in result.containers.values()]
    if any(e is None for e in ends):
        raise ValueError("run not finished")
    starts = [c.submitted_at for c in result.containers.values()]
    return max(ends) - min(starts)


def average_completion(result: RunResult) -> float:
    return sum(completion_time(result, cid) for cid in sorted(result.containers)) / len(
        result.containers
    )


class Simulation:
    """Single-threaded event loop for one scenario."""

    def __init__(
        self,
        *,
        n_workers: int,
        cpu_capacity: float,
        reserved_fraction: float,
        schedule: SubmissionSchedule,
        monitor: MonitorConfig,
        scheduler: SchedulerConfig,
        overhead: OverheadModel,
        policy: str,
        seed: int,
    ):
        if policy not in (POLICY_SPECON, POLICY_DS):
            raise ValueError(f"unknown policy {policy!r}")
        self.policy = policy
        self.seed = int(seed)
        self.monitor_cfg = monitor
        self.scheduler_cfg = scheduler
        self.overhead = overhead
        self.schedule = schedule
        self.n_jobs = len(schedule.jobs)

        self.cluster = ClusterState(
            workers={
                w: WorkerState(w, cpu_capacity, reserved_fraction) for w in range(n_workers)
            }
        )
        self.placement = initial_placement(self.n_jobs, self.cluster.worker_ids())
        self.profiles: dict[int, ModelProfile] = {
            cid: job.profile for cid, job in enumerate(schedule.jobs)
        }
        self.noises = {cid: IterationNoise(seed, cid) for cid in self.profiles}
        self.monitors = {
            w: WorkerMonitor(w, monitor) for w in self.cluster.worker_ids()
        }
        self._rng_overhead = substream(seed, OVERHEAD)

        self.events: list[EventRecord] = []
        self.decisions: list[Decision] = []
        self.rounds: list[RebalanceRound] = []
        self.migrations: list[MigrationRecord] = []
        self.segments: list[Segment] = []
        # per-container (t, iterations, rate) anchors for log-store reads
        self._progress: dict[int, list[tuple[float, float, float]]] = {}
        self._open_migrations: dict[int, dict] = {}

        self._heap: list[tuple[float, int, SimEvent]] = []
        self._seq = 0
        self._completed = 0
        self._inflight_rebalance = 0
        self._handled_requests: set[int] = set()

        for cid, job in enumerate(schedule.jobs):
            self._push(job.offset, SUBMISSION, container=cid)
        for w in self.cluster.worker_ids():
            self._push(monitor.interval, CATEGORIZATION_TICK, worker=w)
        self._push(monitor.interval, REBALANCE_CHECK)

    # -- queue ------------------------------------------------------------

    def _push(self, time: float, kind: str, container: int = -1, worker: int = -1, payload=()):
        ev = SimEvent(time, self._seq, kind, container, worker, payload)
        heapq.heappush(self._heap, (ev.time, ev.seq, ev))
        self._seq += 1

    def _log(self, kind: str, container: int = -1, worker: int = -1, detail: str = ""):
        self.events.append(EventRecord(self.cluster.now, kind, container, worker, detail))

    # -- processor sharing ------------------------------------------------

    def _allocations(self) -> dict[int, float]:
        alloc: dict[int, float] = {}
        for wid, worker in self.cluster.workers.items():
            demands = running_demands(self.cluster, wid)
            if demands:
                alloc.update(allocate_cpu(worker, demands))
        return alloc

    def _rate(self, c: ContainerState, alloc: dict[int, float]) -> float:
        if c.in_flight or c.id not in alloc:
            return 0.0
        return c.iter_rate * alloc[c.id] / c.cpu_demand

    def _next_completion(self) -> tuple[float, int]:
        alloc = self._allocations()
        best_t, best_c = math.inf, -1
        for cid in sorted(self.cluster.containers):
            c = self.cluster.containers[cid]
            if not c.active:
                continue
            rate = self._rate(c, alloc)
            if rate <= 0.0:
                continue
            t = self.cluster.now + (c.total_iterations - c.completed_iterations) / rate
            if t < best_t:
                best_t, best_c = t, cid
        return best_t, best_c

    def _advance(self, dt: float) -> None:
        """Integrate progress over an event-free span of dt seconds."""
        if dt < -1e-9:
            raise AssertionError(f"time went backwards by {dt}")
        if dt <= 0:
            return
        now = self.cluster.now
        alloc = self._allocations()
        counts = {w: active_count(self.cluster, w) for w in self.cluster.worker_ids()}
        cpu = {
            w: sum(alloc.get(cid, 0.0) for cid in self.cluster.active_residents(w))
            / self.cluster.workers[w].cpu_capacity
            for w in self.cluster.worker_ids()
        }
        self.segments.append(Segment(now, now + dt, counts, cpu))
        for cid in sorted(self.cluster.containers):
            c = self.cluster.containers[cid]
            if not c.active or c.in_flight:
                continue
            rate = self._rate(c, alloc)
            self._anchor(cid, now, c.completed_iterations, rate)
            c.completed_iterations = min(
                c.total_iterations, c.completed_iterations + rate * dt
            )
        self.cluster.now = now + dt

    def _anchor(self, cid: int, t: float, iterations: float, rate: float) -> None:
        trail = self._progress.setdefault(cid, [])
        if trail and trail[-1][0] == t:
            trail[-1] = (t, iterations, rate)
        else:
            trail.append((t, iterations, rate))

    def iterations_at(self, cid: int, t: float) -> float:
        """Reconstruct a container's progress at any past instant."""
        trail = self._progress.get(cid)
        if not trail or t <= trail[0][0]:
            return 0.0
        i = bisect_right(trail, (t, math.inf, math.inf)) - 1
        t0, k0, rate = trail[i]
        c = self.cluster.containers[cid]
        return min(c.total_iterations, k0 + rate * (t - t0))

    # -- event handling ---------------------------------------------------

    def run(self) -> RunResult:
        while self._completed < self.n_jobs:
            t_done, cid_done = self._next_completion()
            t_event = self._heap[0][0] if self._heap else math.inf
            if t_done <= t_event:
                assert t_done < math.inf, "active jobs but nothing can finish"
                self._advance(t_done - self.cluster.now)
                self._complete(cid_done)
                continue
            _, _, ev = heapq.heappop(self._heap)
            self._advance(ev.time - self.cluster.now)
            self._dispatch(ev)
        return RunResult(
            policy=self.policy,
            seed=self.seed,
            n_jobs=self.n_jobs,
            containers=self.cluster.containers,
            events=self.events,
            decisions=self.decisions,
            rounds=self.rounds,
            migrations=self.migrations,
            segments=self.segments,
            worker_ids=self.cluster.worker_ids(),
            placement=list(self.placement),
        )

    def _dispatch(self, ev: SimEvent) -> None:
        if ev.kind == SUBMISSION:
            self._submit(ev.container)
        elif ev.kind == CATEGORIZATION_TICK:
            self._tick(ev.worker)
        elif ev.kind == MIGRATION_COMPLETE:
            self._finish_migration(ev.container)
        elif ev.kind == REBALANCE_CHECK:
            self._rebalance_check()
        elif ev.kind == REQUEST_DELIVERY:
            self._handle_requests(list(ev.payload))
        else:  # pragma: no cover - queue only ever holds the kinds above
            raise AssertionError(f"unexpected event kind {ev.kind}")

    def _submit(self, cid: int) -> None:
        profile = self.profiles[cid]
        c = ContainerState(
            id=cid,
            host=self.placement[cid],
            model_profile=profile.label,
            total_iterations=profile.total_iterations,
            cpu_demand=profile.cpu_demand,
            iter_rate=profile.base_iter_rate,
            submitted_at=self.cluster.now,
        )
        self.cluster.add_container(c)
        self._log(SUBMISSION, container=cid, worker=c.host, detail=f"profile={profile.label}")

    def _read_eval(self, c: ContainerState, t: float) -> float:
        q = max(c.submitted_at, t - self.monitor_cfg.read_delay)
        k = math.floor(self.iterations_at(c.id, q))
        return loss_at(self.profiles[c.id], k, self.noises[c.id])

    def _tick(self, worker: int) -> None:
        changes, requests = self.monitors[worker].tick(
            self.cluster, self.cluster.now, self._read_eval
        )
        detail = ";".join(f"c{ch.container}:{ch.old.value}->{ch.new.value}" for ch in changes)
        self._log(CATEGORIZATION_TICK, worker=worker, detail=detail)
        if requests and self.policy == POLICY_SPECON:
            if self.scheduler_cfg.heartbeat_delay > 0:
                self._push(
                    self.cluster.now + self.scheduler_cfg.heartbeat_delay,
                    REQUEST_DELIVERY,
                    payload=tuple(requests),
                )
            else:
                self._handle_requests(requests)
        self._push(self.cluster.now + self.monitor_cfg.interval, CATEGORIZATION_TICK, worker=worker)

    def _handle_requests(self, requests: list[ReallocationRequest]) -> None:
        for req in requests:
            if req.container in self._handled_requests:
                continue
            decision = select_target(self.cluster, req, self.scheduler_cfg)
            if decision is None:
                continue  # stale: container finished or already handled
            self._handled_requests.add(req.container)
            self.decisions.append(decision)
            if decision.target is not None:
                self._start_migration(req.container, decision.target, SPECULATIVE)

    def _start_migration(self, cid: int, dest: int, reason: str) -> None:
        c = self.cluster.containers[cid]
        if not c.active:
            log.warning("ignoring migration of completed container %d", cid)
            return
        if dest == c.host:
            return  # zero-duration no-op; no pause, nothing to do
        delay = self.overhead.sample(self._rng_overhead)
        src = c.host
        self.cluster.move_resident(cid, dest)
        c.in_flight = True
        c.n_migrations += 1
        self._anchor(cid, self.cluster.now, c.completed_iterations, 0.0)
        self._open_migrations[cid] = {
            "source": src,
            "dest": dest,
            "reason": reason,
            "start": self.cluster.now,
            "delay": delay,
            "iterations": c.completed_iterations,
        }
        if reason == REBALANCE:
            self._inflight_rebalance += 1
        self._log(
            MIGRATION_START,
            container=cid,
            worker=dest,
            detail=f"reason={reason};from=w{src};delay={delay!r};iterations={c.completed_iterations!r}",
        )
        self._push(self.cluster.now + delay, MIGRATION_COMPLETE, container=cid)

    def _finish_migration(self, cid: int) -> None:
        c = self.cluster.containers[cid]
        open_rec = self._open_migrations.pop(cid)
        c.in_flight = False
        self._anchor(cid, self.cluster.now, c.completed_iterations, 0.0)
        if open_rec["reason"] == REBALANCE:
            self._inflight_rebalance -= 1
        self.migrations.append(
            MigrationRecord(
                container=cid,
                source=open_rec["source"],
                dest=open_rec["dest"],
                reason=open_rec["reason"],
                start=open_rec["start"],
                end=self.cluster.now,
                delay=open_rec["delay"],
                iterations_at_start=open_rec["iterations"],
                iterations_at_end=c.completed_iterations,
            )
        )
        self._log(
            MIGRATION_COMPLETE,
            container=cid,
            worker=c.host,
            detail=f"iterations={c.completed_iterations!r}",
        )

    def _rebalance_check(self) -> None:
        if self.policy != POLICY_SPECON:
            self._log(REBALANCE_CHECK, detail="policy=ds;noop")
        elif self._inflight_rebalance > 0:
            rnd = RebalanceRound(self.cluster.now, -1, -1, {}, {}, {}, skipped=True)
            self.rounds.append(rnd)
            self._log(REBALANCE_CHECK, detail="skipped=in-flight")
        else:
            rnd = plan_rebalance(self.cluster, self.cluster.now)
            self.rounds.append(rnd)
            counts = ";".join(f"w{w}={n}" for w, n in sorted(rnd.counts.items()))
            self._log(
                REBALANCE_CHECK,
                detail=f"sum={rnd.total_active};bf={rnd.bf};{counts};directives={len(rnd.directives)}",
            )
            for directive in rnd.directives:
                self.cluster.containers[directive.container].mark_rebalanced()
                self._start_migration(directive.container, directive.dest, REBALANCE)
        self._push(self.cluster.now + self.monitor_cfg.interval, REBALANCE_CHECK)

    def _complete(self, cid: int) -> None:
        c = self.cluster.containers[cid]
        drift = abs(c.completed_iterations - c.total_iterations)
        assert drift < _ITER_EPS, f"container {cid} finished {drift} iterations off"
        c.completed_iterations = float(c.total_iterations)
        c.completed_at = self.cluster.now
        self._anchor(cid, self.cluster.now, c.completed_iterations, 0.0)
        self.cluster.retire(cid)
        self._completed += 1
        self._log(JOB_COMPLETION, container=cid, worker=c.host)
