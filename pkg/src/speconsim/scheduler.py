"""Manager-side speculative placement: weighted scoring over category counts.

Workers are scored S = |PC|*w_pc + |WC|*w_wc + |CC|*w_cc; the candidate set
is the argmin.  A container whose host is already a candidate stays put (but
is still marked migrated, permanently leaving the monitor's scope); otherwise
it moves to the sole candidate, or to the candidate with the lowest resource
consumption, ids breaking exact ties.

The spread baseline ("ds") shares the round-robin initial placement and
simply never acts on requests or rebalance checks.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ClusterState, SchedulerConfig, resource_consumption
from .monitor import ReallocationRequest


@dataclass(frozen=True)
class Decision:
    """Outcome of one handled reallocation request."""

    time: float
    container: int
    source: int
    target: int | None  # None: stay on source
    scores: dict[int, float]
    consumption: dict[int, float]

    @property
    def stayed(self) -> bool:
        return self.target is None


def score_workers(cluster: ClusterState, config: SchedulerConfig) -> dict[int, float]:
    """Weighted category-count score per worker; completed containers excluded."""
    return {
        wid: len(w.pc_set) * config.w_pc
        + len(w.wc_set) * config.w_wc
        + len(w.cc_set) * config.w_cc
        for wid, w in sorted(cluster.workers.items())
    }


def choose_target(
    host: int, scores: dict[int, float], consumption: dict[int, float]
) -> int | None:
    """Pure placement rule: argmin score, then argmin consumption, then id."""
    lowest = min(scores.values())
    candidates = [w for w in sorted(scores) if scores[w] == lowest]
    if host in candidates:
        return None
    if len(candidates) == 1:
        return candidates[0]
    least = min(consumption[w] for w in candidates)
    return min(w for w in candidates if consumption[w] == least)


def select_target(
    cluster: ClusterState, request: ReallocationRequest, config: SchedulerConfig
) -> Decision | None:
    """Handle one reallocation request against the current cluster snapshot.

    Returns None for stale requests (container finished or already handled).
    Marks the container migrated either way it is placed; the caller performs
    the physical move when a target is returned.
    """
    c = cluster.containers[request.container]
    if not c.active or c.migrated:
        return None
    scores = score_workers(cluster, config)
    consumption = {wid: resource_consumption(cluster, wid) for wid in scores}
    target = choose_target(c.host, scores, consumption)
    c.mark_migrated(cluster.now)
    return Decision(
        time=cluster.now,
        container=c.id,
        source=c.host,
        target=target,
        scores=scores,
        consumption=consumption,
    )


def initial_placement(n_jobs: int, worker_ids: list[int]) -> list[int]:
    """Round-robin by submission order: job k lands on worker k mod |W|."""
    ids = sorted(worker_ids)
    return [ids[k % len(ids)] for k in range(n_jobs)]
