"""Render simulator CSV reports as figures.

Reads only the documented speconsim file schemas:

  compare_jobs.csv     id,profile,ds_completion,specon_completion,...
  timeline_w<k>.csv    second,containers,cpu_fraction

and never mutates its inputs; re-rendering the same spec is idempotent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("completion-bars", "distribution-timeline", "cpu-timeline")


class RenderError(ValueError):
    """Input files missing, empty, or not matching the documented schema."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str  # one of KINDS
    input_dir: Path
    output: Path
    title: str = ""


@dataclass(frozen=True)
class RenderResult:
    output: Path
    bars: int = 0  # job pairs drawn (completion-bars)
    panels: int = 0  # worker panels drawn (timelines)


def _read_csv(path: Path, required: list[str]) -> list[dict]:
    if not path.exists():
        raise RenderError(f"missing input file: {path}")
    with path.open() as fh:
        reader = csv.DictReader(fh)
        missing = set(required) - set(reader.fieldnames or [])
        if missing:
            raise RenderError(f"{path.name}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path.name}: no data rows")
    return rows


def _timeline_files(input_dir: Path) -> list[Path]:
    files = sorted(
        input_dir.glob("timeline_w*.csv"),
        key=lambda p: int(p.stem.split("_w")[1]),
    )
    if not files:
        raise RenderError(f"no timeline_w*.csv files in {input_dir}")
    return files


def _render_completion_bars(spec: PlotSpec) -> RenderResult:
    rows = _read_csv(
        spec.input_dir / "compare_jobs.csv",
        ["id", "ds_completion", "specon_completion"],
    )
    ids = [int(r["id"]) for r in rows]
    ds = [float(r["ds_completion"]) for r in rows]
    sc = [float(r["specon_completion"]) for r in rows]
    width = 0.4
    fig, ax = plt.subplots(figsize=(max(8, 0.45 * len(ids)), 4.5))
    ax.bar([i - width / 2 for i in ids], ds, width, label="DS", color="#7f7f7f")
    ax.bar([i + width / 2 for i in ids], sc, width, label="SpeCon", color="#1f77b4")
    ax.set_xlabel("job")
    ax.set_ylabel("completion time (s)")
    ax.set_xticks(ids)
    ax.set_title(spec.title or "Completion time per job")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return RenderResult(output=spec.output, bars=len(ids))


def _render_timelines(spec: PlotSpec, column: str, ylabel: str) -> RenderResult:
    files = _timeline_files(spec.input_dir)
    fig, axes = plt.subplots(
        len(files), 1, figsize=(9, 2.2 * len(files)), sharex=True, squeeze=False
    )
    for ax, path in zip(axes[:, 0], files):
        rows = _read_csv(path, ["second", column])
        seconds = [int(r["second"]) for r in rows]
        values = [float(r[column]) for r in rows]
        worker = path.stem.split("_")[1]
        ax.step(seconds, values, where="post", linewidth=1.0)
        ax.set_ylabel(ylabel)
        ax.set_title(f"Worker {worker}", fontsize=9, loc="left")
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("time (s)")
    fig.suptitle(spec.title or ylabel)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return RenderResult(output=spec.output, panels=len(files))


def render(spec: PlotSpec) -> RenderResult:
    """Write the figure for a spec and report what was drawn."""
    if spec.kind not in KINDS:
        raise RenderError(f"unknown plot kind {spec.kind!r}; expected one of {KINDS}")
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "completion-bars":
        return _render_completion_bars(spec)
    if spec.kind == "distribution-timeline":
        return _render_timelines(spec, "containers", "containers")
    return _render_timelines(spec, "cpu_fraction", "CPU fraction")
