import numpy as np
import pytest

from speconsim.config import ScenarioConfig
from speconsim.engine import (
    MIGRATION_START,
    SUBMISSION,
    OverheadModel,
    SimEvent,
    Simulation,
    average_completion,
    completion_time,
    makespan,
)
from speconsim.harness import build_schedule, run_scenario
from speconsim.model import MonitorConfig, SchedulerConfig
from speconsim.rng import substream


def make_sim(cfg: ScenarioConfig) -> Simulation:
    return Simulation(
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


class TestOverheadModel:
    def test_samples_within_bounds_and_sd(self):
        model = OverheadModel()
        gen = substream(1, 9)
        draws = [model.sample(gen) for _ in range(10_000)]
        assert all(0.5 <= d <= 5.0 for d in draws)
        assert abs(np.std(draws, ddof=1) - 1.43) <= 0.15

    def test_zero_floor_variant(self):
        model = OverheadModel(lo=0.0)
        gen = substream(2, 9)
        draws = [model.sample(gen) for _ in range(10_000)]
        assert all(0.0 <= d <= 5.0 for d in draws)
        assert abs(np.std(draws, ddof=1) - 1.43) <= 0.15

    def test_sample_mean_tracks_configured_mean(self):
        model = OverheadModel()
        gen = substream(3, 9)
        draws = [model.sample(gen) for _ in range(20_000)]
        assert np.mean(draws) == pytest.approx(3.0, abs=0.05)

    def test_degenerate_sd_zero(self):
        model = OverheadModel(sd=0.0)
        gen = substream(4, 9)
        assert model.sample(gen) == 3.0

    def test_infeasible_sd_rejected(self):
        with pytest.raises(ValueError):
            OverheadModel(mean=3.0, sd=3.0, lo=2.0, hi=4.0).parent_params()

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            OverheadModel(lo=4.0, hi=2.0)
        with pytest.raises(ValueError):
            OverheadModel(mean=10.0)


class TestProgressIntegration:
    def test_single_job_runs_at_solo_speed(self):
        cfg = ScenarioConfig(
            n_workers=1, n_jobs=1, total_iterations=1000, budget_jitter=0.0,
            cpu_capacity=10.0, cpu_demand=4.0, base_iter_rate=2.0, noise_sigma=0.0,
        )
        report = run_scenario(cfg)
        assert report.rows[0].completion == pytest.approx(500.0, abs=1e-9)
        assert report.rows[0].n_migrations == 0

    def test_proportional_slowdown_under_sharing(self):
        # two jobs of demand 8 on usable 8: each runs at half speed
        cfg = ScenarioConfig(
            n_workers=1, n_jobs=2, total_iterations=1000, budget_jitter=0.0,
            cpu_capacity=10.0, cpu_demand=8.0, base_iter_rate=2.0, noise_sigma=0.0,
            schedule_interval=30.0,
        )
        report = run_scenario(cfg)
        # job 0 solo for 30s (60 it), then both at rate 1.0
        c0, c1 = report.rows
        assert c0.completed_at == pytest.approx(30.0 + (1000 - 60) / 1.0 + 0, abs=1.0)
        assert c1.completion > 500.0

    def test_paused_container_makes_no_progress(self):
        cfg = ScenarioConfig(seed=8)
        report = run_scenario(cfg)
        migs = report.result.migrations
        assert migs, "reference scenario is expected to migrate"
        for m in migs:
            assert m.iterations_at_start == m.iterations_at_end
            assert m.end - m.start == pytest.approx(m.delay)
            assert 0.5 <= m.delay <= 5.0

    def test_work_conservation_at_completion(self):
        report = run_scenario(ScenarioConfig(seed=8, n_jobs=10))
        for c in report.result.containers.values():
            assert c.completed_iterations == float(c.total_iterations)

    def test_rate_never_exceeds_base_rate(self):
        cfg = ScenarioConfig(seed=8, n_jobs=10)
        sim = make_sim(cfg)
        result = sim.run()
        for cid, trail in sim._progress.items():
            top = result.containers[cid].iter_rate
            assert all(rate <= top + 1e-12 for _, _, rate in trail)


class TestMigrationMechanics:
    def test_migration_to_current_host_is_noop(self):
        cfg = ScenarioConfig(n_workers=2, n_jobs=1)
        sim = make_sim(cfg)
        sim._dispatch(SimEvent(0.0, 0, SUBMISSION, container=0))
        sim._start_migration(0, dest=sim.cluster.containers[0].host, reason="speculative")
        c = sim.cluster.containers[0]
        assert not c.in_flight and c.n_migrations == 0
        assert not any(ev.kind == MIGRATION_START for ev in sim.events)

    def test_completed_container_migration_ignored(self):
        cfg = ScenarioConfig(n_workers=2, n_jobs=1)
        sim = make_sim(cfg)
        sim._dispatch(SimEvent(0.0, 0, SUBMISSION, container=0))
        c = sim.cluster.containers[0]
        c.completed_at = 1.0
        sim.cluster.retire(0)
        sim._start_migration(0, dest=1, reason="speculative")
        assert c.n_migrations == 0 and not c.in_flight

    def test_resident_moves_to_destination_at_start(self):
        cfg = ScenarioConfig(n_workers=2, n_jobs=1)
        sim = make_sim(cfg)
        sim._dispatch(SimEvent(0.0, 0, SUBMISSION, container=0))
        sim.cluster.containers[0].mark_migrated(0.0)
        from speconsim.model import Category

        sim.cluster.set_category(0, Category.CONVERGED)
        sim._start_migration(0, dest=1, reason="rebalance")
        c = sim.cluster.containers[0]
        assert c.host == 1 and c.in_flight
        assert 0 in sim.cluster.workers[1].residents
        assert 0 not in sim.cluster.workers[0].residents


class TestMetrics:
    def _finished(self):
        from conftest import add_container, make_cluster
        from speconsim.engine import RunResult

        cl = make_cluster()
        a = add_container(cl, 0, 0)
        a.completed_at = 100.0
        b = add_container(cl, 1, 1, submitted_at=50.0)
        b.completed_at = 300.0
        return RunResult(
            policy="ds", seed=0, n_jobs=2, containers=cl.containers, events=[],
            decisions=[], rounds=[], migrations=[], segments=[], worker_ids=[0, 1],
            placement=[0, 1],
        )

    def test_two_job_example(self):
        res = self._finished()
        assert completion_time(res, 0) == 100.0
        assert completion_time(res, 1) == 250.0
        assert makespan(res) == 300.0
        assert average_completion(res) == 175.0

    def test_single_job_example(self):
        res = self._finished()
        res.containers.pop(1)
        assert makespan(res) == 100.0 and average_completion(res) == 100.0

    def test_unfinished_run_rejected(self):
        res = self._finished()
        res.containers[1].completed_at = None
        with pytest.raises(ValueError):
            makespan(res)
        with pytest.raises(ValueError):
            completion_time(res, 1)


class TestDeterminism:
    def test_identical_runs_produce_identical_events(self):
        cfg = ScenarioConfig(seed=8, n_jobs=12)
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.result.events == b.result.events
        assert [(r.id, r.completed_at) for r in a.rows] == [
            (r.id, r.completed_at) for r in b.rows
        ]

    def test_event_times_non_decreasing(self):
        report = run_scenario(ScenarioConfig(seed=8, n_jobs=12))
        times = [ev.time for ev in report.result.events]
        assert times == sorted(times)

    def test_submission_stream_identical_across_policies(self):
        cfg = ScenarioConfig(seed=3, n_jobs=10)
        ds = run_scenario(cfg.replace(policy="ds"))
        sc = run_scenario(cfg.replace(policy="specon"))
        subs_ds = [e for e in ds.result.events if e.kind == SUBMISSION]
        subs_sc = [e for e in sc.result.events if e.kind == SUBMISSION]
        assert subs_ds == subs_sc

    def test_ds_never_migrates_and_hosts_are_constant(self):
        cfg = ScenarioConfig(seed=5, policy="ds")
        report = run_scenario(cfg)
        assert not any(e.kind == MIGRATION_START for e in report.result.events)
        assert report.result.migrations == []
        for cid, c in report.result.containers.items():
            assert c.host == report.result.placement[cid]
            assert not c.migrated and not c.rebalanced


class TestHeartbeatDelay:
    def test_requests_processed_after_delay(self):
        cfg = ScenarioConfig(seed=8)
        cfg = cfg.replace(scheduler=SchedulerConfig(heartbeat_delay=5.0))
        report = run_scenario(cfg)
        decisions = report.result.decisions
        assert decisions, "expected decisions in the reference scenario"
        for d in decisions:
            assert (d.time - 5.0) % 30.0 == pytest.approx(0.0, abs=1e-6)


class TestReadDelay:
    def test_stale_reads_still_deterministic(self):
        cfg = ScenarioConfig(seed=8, n_jobs=10)
        cfg = cfg.replace(monitor=MonitorConfig(alpha=0.01, interval=30.0, read_delay=10.0))
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.result.events == b.result.events

    def test_progress_reconstruction_matches_history(self):
        cfg = ScenarioConfig(n_workers=1, n_jobs=1, total_iterations=1000,
                             budget_jitter=0.0, cpu_capacity=10.0, cpu_demand=4.0,
                             base_iter_rate=2.0, noise_sigma=0.0)
        sim = make_sim(cfg)
        sim.run()
        # solo job at rate 2: k(t) = 2t up to completion at t=500
        assert sim.iterations_at(0, 100.0) == pytest.approx(200.0)
        assert sim.iterations_at(0, 499.0) == pytest.approx(998.0)
        assert sim.iterations_at(0, 600.0) == pytest.approx(1000.0)
