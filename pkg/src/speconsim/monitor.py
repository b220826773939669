"""Worker-side container monitor: growth tracking and the PC/WC/CC machine.

Each worker samples the evaluation value of its unmigrated residents once per
categorization interval.  The value stream is normalized by the container's
first observed sample so the threshold acts as a percentage of the initial
loss.  Per tick, with growth G and the previous growth G_prev:

  * G < G_prev and G < alpha: demote one stage (PC->WC, WC->CC); a container
    already converged stays converged and, while the worker still hosts more
    than one progressing/watching container, a reallocation request is sent.
  * G >= G_prev and G < alpha (bouncing), or G == alpha: stay put.
  * G > alpha: reset to PC whatever the current category.

Demotion needs two real growth values: the first computed growth can only
trigger the reset branch, never a demotion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .model import Category, ClusterState, ContainerState, MonitorConfig

ReadEval = Callable[[ContainerState, float], float]


def growth(e_prev: float, e_curr: float) -> float:
    """Absolute change of the normalized evaluation value over one interval."""
    return abs(e_curr - e_prev)


@dataclass(frozen=True)
class ReallocationRequest:
    container: int
    worker: int
    time: float


@dataclass
class _Track:
    first_raw: float
    last_e: float  # normalized
    last_g: float | None = None  # None until a first growth exists


@dataclass(frozen=True)
class CategoryChange:
    container: int
    old: Category
    new: Category


class WorkerMonitor:
    """Per-worker sampling state and categorization logic."""

    def __init__(self, worker_id: int, config: MonitorConfig):
        self.worker_id = worker_id
        self.config = config
        self._tracks: dict[int, _Track] = {}

    def tick(
        self, cluster: ClusterState, t: float, read_eval: ReadEval
    ) -> tuple[list[CategoryChange], list[ReallocationRequest]]:
        """Sample eligible residents in id order; apply category transitions."""
        worker = cluster.workers[self.worker_id]
        changes: list[CategoryChange] = []
        requests: list[ReallocationRequest] = []
        for cid in cluster.active_residents(self.worker_id):
            c = cluster.containers[cid]
            if c.migrated:
                continue
            raw = read_eval(c, t)
            track = self._tracks.get(cid)
            if track is None:
                if raw <= 0:
                    raise ValueError(f"non-positive first sample for container {cid}")
                self._tracks[cid] = _Track(first_raw=raw, last_e=raw / raw)
                c.trace.samples.append((t, raw))
                continue
            e = raw / track.first_raw
            g = growth(track.last_e, e)
            c.trace.samples.append((t, raw))
            c.trace.growths.append((t, g))
            change, request = self._apply(cluster, worker, c, g, track.last_g, t)
            if change is not None:
                changes.append(change)
            if request is not None:
                requests.append(request)
            track.last_e = e
            track.last_g = g
        return changes, requests

    def _apply(self, cluster, worker, c, g, g_prev, t):
        alpha = self.config.alpha
        if g > alpha:
            # sudden gain: force back to progressing
            if c.category is not Category.PROGRESSING:
                old = c.category
                cluster.set_category(c.id, Category.PROGRESSING)
                return CategoryChange(c.id, old, Category.PROGRESSING), None
            return None, None
        if g_prev is None or g >= g_prev or g == alpha:
            return None, None  # first growth, bouncing, or exactly at threshold
        # g < g_prev and g < alpha
        if c.category is Category.PROGRESSING:
            cluster.set_category(c.id, Category.WATCHING)
            return CategoryChange(c.id, Category.PROGRESSING, Category.WATCHING), None
        if c.category is Category.WATCHING:
            cluster.set_category(c.id, Category.CONVERGED)
            return CategoryChange(c.id, Category.WATCHING, Category.CONVERGED), None
        # stays converged; nag the manager while the worker is still crowded
        if len(worker.pc_set) + len(worker.wc_set) > 1:
            return None, ReallocationRequest(c.id, worker.id, t)
        return None, None
