"""Periodic redistribution of converged containers toward the balance factor.

Once placement decisions have frozen (converged containers are moved at most
once), finished jobs can leave some workers idle while others still queue.
Each round takes a snapshot of active counts, computes bf = floor(total / |W|)
and the converged duration d = now - converged_at of every movable container
(migrated, not yet rebalanced, not mid-checkpoint), then either

  * fills idle workers up to bf, repeatedly pulling the globally
    most-recently-converged container (minimum d), or
  * when nobody is idle, lets each loaded worker outside the candidate set
    T = {w : count < bf - 1} spill its minimum-d container into a member of T
    that stays below bf and strictly below the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import ClusterState, active_count


def balance_factor(total_active: int, n_workers: int) -> int:
    """Uniform per-worker load target: floor(total_active / n_workers)."""
    if n_workers < 1:
        raise ValueError("need at least one worker")
    return total_active // n_workers


@dataclass(frozen=True)
class Directive:
    """One planned rebalance migration."""

    time: float
    container: int
    source: int
    dest: int
    d_value: float  # converged duration at planning time
    bf: int
    reason: str  # "idle-fill" | "overload-spill"


@dataclass
class RebalanceRound:
    """Snapshot and outcome of one rebalance check."""

    time: float
    total_active: int
    bf: int
    counts: dict[int, int]  # active count per worker at snapshot time
    movable: dict[int, float]  # container id -> converged duration d
    hosts: dict[int, int]  # movable container id -> host at snapshot time
    directives: list[Directive] = field(default_factory=list)
    skipped: bool = False


def plan_rebalance(cluster: ClusterState, t: float) -> RebalanceRound:
    """Plan one round of rebalance migrations against the current state."""
    counts = {wid: active_count(cluster, wid) for wid in cluster.worker_ids()}
    total = sum(counts.values())
    bf = balance_factor(total, len(counts))
    movable: dict[int, float] = {}
    hosts: dict[int, int] = {}
    for cid in sorted(cluster.containers):
        c = cluster.containers[cid]
        if c.active and c.migrated and not c.rebalanced and not c.in_flight:
            movable[cid] = t - c.converged_at
            hosts[cid] = c.host
    rnd = RebalanceRound(t, total, bf, dict(counts), dict(movable), dict(hosts))

    def pop_min_d(pool: dict[int, float]) -> tuple[int, float]:
        cid = min(pool, key=lambda i: (pool[i], i))
        return cid, pool.pop(cid)

    idle = [w for w in sorted(counts) if counts[w] == 0]
    pool = dict(movable)
    if idle:
        for w in idle:
            while counts[w] < bf and pool:
                cid, d = pop_min_d(pool)
                src = hosts[cid]
                rnd.directives.append(Directive(t, cid, src, w, d, bf, "idle-fill"))
                counts[src] -= 1
                counts[w] += 1
        return rnd

    targets = [w for w in sorted(counts) if counts[w] < bf - 1]
    if not targets:
        return rnd
    for src in sorted(counts):
        if src in targets:
            continue
        local = [cid for cid in pool if hosts[cid] == src]
        if not local:
            continue
        cid = min(local, key=lambda i: (pool[i], i))
        for dest in targets:
            # destination stays below bf and strictly below the source
            if counts[dest] < bf and counts[src] - 1 >= counts[dest] + 1:
                d = pool.pop(cid)
                rnd.directives.append(Directive(t, cid, src, dest, d, bf, "overload-spill"))
                counts[src] -= 1
                counts[dest] += 1
                break
    return rnd
