"""Experiment harness: scenario execution, paired comparison, parameter sweeps.

CSV layouts (column order is part of the contract):

  jobs.csv               id,profile,submitted_at,completed_at,completion,n_migrations,rebalanced
  summary.csv            key,value rows: label, policy, seed, n_jobs,
                         average_completion, makespan
  timeline_w<k>.csv      second,containers,cpu_fraction  (one file per worker)
  events.log             time,kind,container,worker,detail
  decisions.log          time,container,from,to,scores,consumption
  directives.log         time,container,from,to,d,bf,reason
  compare_jobs.csv       id,profile,ds_completion,specon_completion,delta,delta_pct,improved
  compare_summary.csv    reduced_pct,overall_pct,best_pct,makespan_pct,
                         ds_average,specon_average,ds_makespan,specon_makespan
  sweep.csv              alpha,interval,reduced_pct,overall_pct,best_pct,makespan_pct
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

from .config import ConfigError, ScenarioConfig, dump_config
from .engine import (
    POLICY_DS,
    POLICY_SPECON,
    RunResult,
    Simulation,
    average_completion,
    completion_time,
    makespan,
)
from .workload import make_schedule


@dataclass(frozen=True)
class JobRow:
    id: int
    profile: str
    submitted_at: float
    completed_at: float
    completion: float
    n_migrations: int
    rebalanced: bool


@dataclass
class RunReport:
    """Per-job rows, summary metrics, and per-second worker timelines."""

    label: str
    policy: str
    seed: int
    rows: list[JobRow]
    average_completion: float
    makespan: float
    timelines: dict[int, list[tuple[int, int, float]]]  # wid -> (second, count, cpu)
    result: RunResult


def build_schedule(cfg: ScenarioConfig):
    return make_schedule(
        cfg.schedule_kind,
        cfg.n_jobs,
        cfg.profile_rule,
        cfg.seed,
        interval=cfg.schedule_interval,
        window=cfg.schedule_window,
        total_iterations=cfg.total_iterations,
        budget_jitter=cfg.budget_jitter,
        noise_sigma=cfg.noise_sigma,
        cpu_demand=cfg.cpu_demand,
        base_iter_rate=cfg.base_iter_rate,
    )


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Execute one scenario to quiescence and aggregate its report."""
    cfg.validate()
    sim = Simulation(
        n_workers=cfg.n_workers,
        cpu_capacity=cfg.cpu_capacity,
        reserved_fraction=cfg.reserved_fraction,
        schedule=build_schedule(cfg),
        monitor=cfg.monitor,
        scheduler=cfg.scheduler,
        overhead=cfg.overhead,
        policy=cfg.policy,
        seed=cfg.seed,
    )
    result = sim.run()
    rows = [
        JobRow(
            id=cid,
            profile=c.model_profile,
            submitted_at=c.submitted_at,
            completed_at=c.completed_at,
            completion=completion_time(result, cid),
            n_migrations=c.n_migrations,
            rebalanced=c.rebalanced,
        )
        for cid, c in sorted(result.containers.items())
    ]
    return RunReport(
        label=cfg.label,
        policy=cfg.policy,
        seed=cfg.seed,
        rows=rows,
        average_completion=sum(r.completion for r in rows) / len(rows),
        makespan=makespan(result),
        timelines=_sample_timelines(result),
        result=result,
    )


def _sample_timelines(result: RunResult) -> dict[int, list[tuple[int, int, float]]]:
    """Per-second (count, cpu fraction) samples from the piecewise segments."""
    end = max(c.completed_at for c in result.containers.values())
    horizon = int(math.floor(end))
    timelines: dict[int, list[tuple[int, int, float]]] = {w: [] for w in result.worker_ids}
    segments = result.segments
    i = 0
    for second in range(horizon + 1):
        while i < len(segments) and segments[i].t1 <= second:
            i += 1
        if i < len(segments) and segments[i].t0 <= second < segments[i].t1:
            seg = segments[i]
            for w in result.worker_ids:
                timelines[w].append((second, seg.counts[w], seg.cpu[w]))
        else:
            for w in result.worker_ids:
                timelines[w].append((second, 0, 0.0))
    return timelines


# -- comparison --------------------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    id: int
    profile: str
    ds_completion: float
    specon_completion: float

    @property
    def delta(self) -> float:
        return self.ds_completion - self.specon_completion

    @property
    def delta_pct(self) -> float:
        return 100.0 * self.delta / self.ds_completion

    @property
    def improved(self) -> bool:
        return self.specon_completion < self.ds_completion


@dataclass
class CompareReport:
    """Paired per-job deltas and the four headline percentages."""

    rows: list[CompareRow]
    reduced_pct: float  # share of jobs that completed faster
    overall_pct: float  # average completion time improvement
    best_pct: float  # largest single-job improvement
    makespan_pct: float  # makespan improvement
    baseline: RunReport
    candidate: RunReport


def _schedule_key(report: RunReport):
    return [
        (r.id, r.profile, r.submitted_at, report.result.containers[r.id].total_iterations)
        for r in report.rows
    ]


def compare_reports(baseline: RunReport, candidate: RunReport) -> CompareReport:
    """Pair two runs that share a submission schedule (offsets, profiles, budgets)."""
    if _schedule_key(baseline) != _schedule_key(candidate):
        raise ConfigError("mismatched schedules: runs are not comparable")
    rows = [
        CompareRow(b.id, b.profile, b.completion, c.completion)
        for b, c in zip(baseline.rows, candidate.rows)
    ]
    return CompareReport(
        rows=rows,
        reduced_pct=100.0 * sum(r.improved for r in rows) / len(rows),
        overall_pct=100.0
        * (baseline.average_completion - candidate.average_completion)
        / baseline.average_completion,
        best_pct=max(r.delta_pct for r in rows),
        makespan_pct=100.0 * (baseline.makespan - candidate.makespan) / baseline.makespan,
        baseline=baseline,
        candidate=candidate,
    )


def compare_scenarios(cfg: ScenarioConfig) -> CompareReport:
    """Run the scenario under both policies (same seed, same schedule)."""
    ds = run_scenario(cfg.replace(policy=POLICY_DS))
    specon = run_scenario(cfg.replace(policy=POLICY_SPECON))
    return compare_reports(ds, specon)


# -- sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    interval: float


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    interval: float
    reduced_pct: float
    overall_pct: float
    best_pct: float
    makespan_pct: float


def sweep(cfg: ScenarioConfig, points: list[SweepPoint]) -> list[SweepRow]:
    """One paired comparison per grid point, all sharing the base seed."""
    if not points:
        raise ConfigError("sweep grid must not be empty")
    rows = []
    for p in points:
        monitor = dc_replace(cfg.monitor, alpha=p.alpha, interval=p.interval)
        cmp = compare_scenarios(cfg.replace(monitor=monitor))
        rows.append(
            SweepRow(
                alpha=p.alpha,
                interval=p.interval,
                reduced_pct=cmp.reduced_pct,
                overall_pct=cmp.overall_pct,
                best_pct=cmp.best_pct,
                makespan_pct=cmp.makespan_pct,
            )
        )
    return rows


def load_grid(path: str | Path) -> list[SweepPoint]:
    """Grid file: {points: [{alpha: .., interval: ..}, ...]}."""
    import yaml

    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read grid {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if not isinstance(data, dict) or "points" not in data:
        raise ConfigError("grid file must be a mapping with a 'points' list")
    points = []
    for i, entry in enumerate(data["points"]):
        if not isinstance(entry, dict) or set(entry) - {"alpha", "interval"}:
            raise ConfigError(f"grid point {i} must have only alpha/interval keys")
        try:
            points.append(SweepPoint(float(entry["alpha"]), float(entry["interval"])))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"grid point {i} needs numeric alpha and interval") from None
    if not points:
        raise ConfigError("sweep grid must not be empty")
    return points


# -- emission ----------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    """Deterministic scalar formatting (shortest round-trip for floats)."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(report: RunReport, outdir: str | Path, cfg: ScenarioConfig | None = None) -> Path:
    """Emit jobs.csv, summary.csv, per-worker timelines, and the raw logs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        outdir / "jobs.csv",
        ["id", "profile", "submitted_at", "completed_at", "completion", "n_migrations", "rebalanced"],
        [
            [r.id, r.profile, _fmt(r.submitted_at), _fmt(r.completed_at), _fmt(r.completion),
             r.n_migrations, _fmt(r.rebalanced)]
            for r in report.rows
        ],
    )
    _write_csv(
        outdir / "summary.csv",
        ["key", "value"],
        [
            ["label", report.label],
            ["policy", report.policy],
            ["seed", report.seed],
            ["n_jobs", len(report.rows)],
            ["average_completion", _fmt(report.average_completion)],
            ["makespan", _fmt(report.makespan)],
        ],
    )
    for w, samples in sorted(report.timelines.items()):
        _write_csv(
            outdir / f"timeline_w{w}.csv",
            ["second", "containers", "cpu_fraction"],
            [[s, n, _fmt(cpu)] for s, n, cpu in samples],
        )
    with (outdir / "events.log").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "kind", "container", "worker", "detail"])
        for ev in report.result.events:
            writer.writerow([_fmt(ev.time), ev.kind, ev.container, ev.worker, ev.detail])
    with (outdir / "decisions.log").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "container", "from", "to", "scores", "consumption"])
        for d in report.result.decisions:
            scores = ";".join(f"w{w}={_fmt(v)}" for w, v in sorted(d.scores.items()))
            cons = ";".join(f"w{w}={_fmt(v)}" for w, v in sorted(d.consumption.items()))
            to = "stay" if d.stayed else f"w{d.target}"
            writer.writerow([_fmt(d.time), d.container, f"w{d.source}", to, scores, cons])
    with (outdir / "directives.log").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "container", "from", "to", "d", "bf", "reason"])
        for rnd in report.result.rounds:
            for d in rnd.directives:
                writer.writerow(
                    [_fmt(d.time), d.container, f"w{d.source}", f"w{d.dest}", _fmt(d.d_value),
                     d.bf, d.reason]
                )
    if cfg is not None:
        dump_config(cfg, outdir / "config_resolved.yaml")
    return outdir


def write_compare(cmp: CompareReport, outdir: str | Path, cfg: ScenarioConfig | None = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report(cmp.baseline, outdir / "ds", cfg.replace(policy=POLICY_DS) if cfg else None)
    write_report(cmp.candidate, outdir / "specon", cfg.replace(policy=POLICY_SPECON) if cfg else None)
    _write_csv(
        outdir / "compare_jobs.csv",
        ["id", "profile", "ds_completion", "specon_completion", "delta", "delta_pct", "improved"],
        [
            [r.id, r.profile, _fmt(r.ds_completion), _fmt(r.specon_completion), _fmt(r.delta),
             _fmt(r.delta_pct), _fmt(r.improved)]
            for r in cmp.rows
        ],
    )
    _write_csv(
        outdir / "compare_summary.csv",
        ["reduced_pct", "overall_pct", "best_pct", "makespan_pct",
         "ds_average", "specon_average", "ds_makespan", "specon_makespan"],
        [[
            _fmt(cmp.reduced_pct), _fmt(cmp.overall_pct), _fmt(cmp.best_pct), _fmt(cmp.makespan_pct),
            _fmt(cmp.baseline.average_completion), _fmt(cmp.candidate.average_completion),
            _fmt(cmp.baseline.makespan), _fmt(cmp.candidate.makespan),
        ]],
    )
    return outdir


def write_sweep(rows: list[SweepRow], outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        outdir / "sweep.csv",
        ["alpha", "interval", "reduced_pct", "overall_pct", "best_pct", "makespan_pct"],
        [
            [_fmt(r.alpha), _fmt(r.interval), _fmt(r.reduced_pct), _fmt(r.overall_pct),
             _fmt(r.best_pct), _fmt(r.makespan_pct)]
            for r in rows
        ],
    )
    return outdir
