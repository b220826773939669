"""Secondary acceptance: render the reference scenario's CSVs.

The fixtures are produced by driving the simulator CLI as a subprocess, so
this package touches the primary only through its published file formats.
"""

import csv
import subprocess
import sys
from pathlib import Path

import pytest

pytest.importorskip("speconsim", reason="simulator package provides the fixtures")
speconplots = pytest.importorskip("speconplots")
from speconplots import PlotSpec, RenderError, render

REFERENCE_CONFIG = """\
label: reference
seed: 8
"""


@pytest.fixture(scope="session")
def reference_dir(tmp_path_factory) -> Path:
    base = tmp_path_factory.mktemp("reference")
    cfg = base / "scenario.yaml"
    cfg.write_text(REFERENCE_CONFIG)
    out = base / "cmp"
    subprocess.run(
        [sys.executable, "-m", "speconsim.cli", "compare",
         "--config", str(cfg), "--out", str(out)],
        check=True, capture_output=True,
    )
    return out


def _job_count(compare_dir: Path) -> int:
    with (compare_dir / "compare_jobs.csv").open() as fh:
        return sum(1 for _ in csv.DictReader(fh))


def _worker_count(run_dir: Path) -> int:
    return len(list(run_dir.glob("timeline_w*.csv")))


class TestReferenceScenario:
    def test_completion_bars_match_job_count(self, reference_dir, tmp_path):
        spec = PlotSpec("completion-bars", reference_dir, tmp_path / "bars.png")
        result = render(spec)
        assert result.output.exists() and result.output.stat().st_size > 0
        assert result.bars == _job_count(reference_dir) == 20

    def test_distribution_timeline_panels_match_worker_count(self, reference_dir, tmp_path):
        run_dir = reference_dir / "specon"
        spec = PlotSpec("distribution-timeline", run_dir, tmp_path / "dist.png")
        result = render(spec)
        assert result.output.exists()
        assert result.panels == _worker_count(run_dir) == 4

    def test_cpu_timeline_panels_match_worker_count(self, reference_dir, tmp_path):
        run_dir = reference_dir / "ds"
        spec = PlotSpec("cpu-timeline", run_dir, tmp_path / "cpu.png")
        result = render(spec)
        assert result.output.exists()
        assert result.panels == _worker_count(run_dir) == 4

    def test_rendering_is_idempotent_and_read_only(self, reference_dir, tmp_path):
        before = {p.name: p.read_bytes() for p in (reference_dir / "specon").iterdir()}
        spec = PlotSpec("distribution-timeline", reference_dir / "specon", tmp_path / "d.png")
        render(spec)
        render(spec)
        after = {p.name: p.read_bytes() for p in (reference_dir / "specon").iterdir()}
        assert before == after


class TestErrors:
    def test_missing_input_dir(self, tmp_path):
        spec = PlotSpec("completion-bars", tmp_path / "nope", tmp_path / "x.png")
        with pytest.raises(RenderError):
            render(spec)

    def test_missing_columns(self, tmp_path):
        (tmp_path / "compare_jobs.csv").write_text("id,profile\n1,vae\n")
        spec = PlotSpec("completion-bars", tmp_path, tmp_path / "x.png")
        with pytest.raises(RenderError, match="missing columns"):
            render(spec)

    def test_empty_input(self, tmp_path):
        (tmp_path / "compare_jobs.csv").write_text(
            "id,profile,ds_completion,specon_completion\n"
        )
        spec = PlotSpec("completion-bars", tmp_path, tmp_path / "x.png")
        with pytest.raises(RenderError, match="no data rows"):
            render(spec)

    def test_unknown_kind(self, tmp_path):
        spec = PlotSpec("pie", tmp_path, tmp_path / "x.png")
        with pytest.raises(RenderError, match="unknown plot kind"):
            render(spec)


class TestCli:
    def test_render_command(self, reference_dir, tmp_path):
        out = tmp_path / "bars.png"
        proc = subprocess.run(
            [sys.executable, "-m", "speconplots.cli", "render",
             "--kind", "completion-bars", "--in", str(reference_dir),
             "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
        assert "20 job pairs" in proc.stdout

    def test_render_error_exit_code(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "speconplots.cli", "render",
             "--kind", "cpu-timeline", "--in", str(tmp_path),
             "--out", str(tmp_path / "x.png")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
        assert "render error" in proc.stderr
