"""Synthetic training workloads: loss-curve profiles and submission schedules.

Loss curves are exponential decays calibrated so that a fixed fraction of the
total reduction is reached within the first 20% of the iteration budget
(0.65 for vae, 0.90 for gru/rnn/dynrnn, 0.98 for birnn), with optional
multiplicative noise keyed by whole iterations.

Two jobs sharing a model family are not clones: real training runs differ in
dataset size, batch shape, and stopping point.  Each scheduled job therefore
draws its iteration budget from a band around the family default (the budget
jitter), and the families themselves carry relative size factors.  Without
that spread, a fixed-interval submission schedule degenerates into a
perfectly symmetric queue in which no scheduler can beat another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rng import (
    SCHEDULE_BUDGETS,
    SCHEDULE_OFFSETS,
    SCHEDULE_PROFILES,
    IterationNoise,
    substream,
)

PROFILE_NAMES = ("vae", "gru", "birnn", "rnn", "dynrnn")

# fraction of the total loss reduction achieved at 20% of the iterations
REDUCTION_TARGETS = {
    "vae": 0.65,
    "gru": 0.90,
    "birnn": 0.98,
    "rnn": 0.90,
    "dynrnn": 0.90,
}

# relative iteration-budget scale per family (mixed workloads only)
ITERATION_SCALE = {
    "vae": 1.0,
    "gru": 1.4,
    "birnn": 0.6,
    "rnn": 0.8,
    "dynrnn": 1.7,
}

DEFAULT_TOTAL_ITERATIONS = 2400
DEFAULT_BASE_ITER_RATE = 2.0  # iterations/second at the full CPU demand
DEFAULT_CPU_DEMAND = 8.0  # cores
DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_BUDGET_JITTER = 0.55  # relative half-width of the per-job budget band
DEFAULT_L0 = 1.0
DEFAULT_L_INF = 0.1


@dataclass(frozen=True)
class ModelProfile:
    """Parameters of one synthetic training job family."""

    name: str
    l0: float
    l_inf: float
    tau: float  # decay constant, iterations
    noise_sigma: float
    base_iter_rate: float
    cpu_demand: float
    total_iterations: int
    platform: str = ""  # "P"/"T" flavor; affects labeling only

    def __post_init__(self):
        if not self.l0 > self.l_inf >= 0:
            raise ValueError("need l0 > l_inf >= 0")
        if self.tau <= 0 or self.base_iter_rate <= 0:
            raise ValueError("tau and base_iter_rate must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.total_iterations <= 0 or self.cpu_demand <= 0:
            raise ValueError("total_iterations and cpu_demand must be > 0")

    @property
    def label(self) -> str:
        return f"{self.name}-{self.platform}" if self.platform else self.name


def calibrate_profile(
    name: str,
    total_iterations: int = DEFAULT_TOTAL_ITERATIONS,
    *,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    base_iter_rate: float = DEFAULT_BASE_ITER_RATE,
    cpu_demand: float = DEFAULT_CPU_DEMAND,
    l0: float = DEFAULT_L0,
    l_inf: float = DEFAULT_L_INF,
    platform: str = "",
) -> ModelProfile:
    """Profile whose 20%-iteration reduction fraction hits the name's target.

    Solves 1 - exp(-0.2 * total / tau) = f for tau, i.e.
    tau = -0.2 * total / ln(1 - f).
    """
    try:
        target = REDUCTION_TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown profile name {name!r}") from None
    tau = -0.2 * total_iterations / math.log(1.0 - target)
    return ModelProfile(
        name=name,
        l0=l0,
        l_inf=l_inf,
        tau=tau,
        noise_sigma=noise_sigma,
        base_iter_rate=base_iter_rate,
        cpu_demand=cpu_demand,
        total_iterations=total_iterations,
        platform=platform,
    )


def loss_at(profile: ModelProfile, k: float, noise: IterationNoise | None = None) -> float:
    """Evaluation value after k completed iterations.

    Noise is multiplicative and keyed by floor(k), so the value observed at a
    given iteration does not depend on when the monitor happens to look.
    """
    if not 0 <= k <= profile.total_iterations:
        raise ValueError(f"k={k} outside [0, {profile.total_iterations}]")
    clean = profile.l_inf + (profile.l0 - profile.l_inf) * math.exp(-k / profile.tau)
    if noise is None or profile.noise_sigma == 0.0:
        return clean
    return clean * math.exp(profile.noise_sigma * noise.z(int(k)))


@dataclass(frozen=True)
class ScheduledJob:
    profile: ModelProfile
    offset: float  # submission time, seconds


@dataclass(frozen=True)
class SubmissionSchedule:
    """Ordered job list with submission offsets."""

    kind: str  # "fixed" | "random"
    param: float  # fixed: interval; random: window upper bound
    jobs: tuple[ScheduledJob, ...]


def parse_profile_rule(rule: str) -> tuple[str, str | None]:
    """Accepts "single:<name>" (or "single: <name>") and "mixed"."""
    rule = rule.strip()
    if rule == "mixed":
        return "mixed", None
    if rule.startswith("single:"):
        name = rule.split(":", 1)[1].strip()
        if name not in PROFILE_NAMES:
            raise ValueError(f"unknown profile name {name!r}")
        return "single", name
    raise ValueError(f"bad profile rule {rule!r}; use 'single:<name>' or 'mixed'")


def make_schedule(
    kind: str,
    n_jobs: int,
    profile_rule: str,
    seed: int,
    *,
    interval: float = 50.0,
    window: float = 300.0,
    total_iterations: int = DEFAULT_TOTAL_ITERATIONS,
    budget_jitter: float = DEFAULT_BUDGET_JITTER,
    **profile_kwargs,
) -> SubmissionSchedule:
    """Build a deterministic submission schedule from the root seed.

    Fixed schedules submit at 0, interval, 2*interval, ...; random schedules
    draw n_jobs offsets uniformly from [0, window] and sort them.  Profile
    selection is either a single named profile for every job or a uniform
    pick over the profile set crossed with the P/T platform flavor.  Each
    job's iteration budget is the family default scaled by its size factor
    and a uniform draw from [1 - jitter, 1 + jitter]; the decay constant is
    recalibrated per job so the 20%-iteration reduction target still holds.
    """
    if n_jobs <= 0:
        raise ValueError("n_jobs must be > 0")
    if not 0 <= budget_jitter < 1:
        raise ValueError("budget_jitter must be in [0, 1)")
    if kind == "fixed":
        if interval <= 0:
            raise ValueError("fixed schedule needs interval > 0")
        offsets = [i * interval for i in range(n_jobs)]
        param = interval
    elif kind == "random":
        if window <= 0:
            raise ValueError("random schedule needs window > 0")
        gen = substream(seed, SCHEDULE_OFFSETS)
        offsets = sorted(float(x) for x in gen.uniform(0.0, window, n_jobs))
        param = window
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")

    mode, single_name = parse_profile_rule(profile_rule)
    if mode == "single":
        picks = [(single_name, "")] * n_jobs
        scales = [1.0] * n_jobs
    else:
        gen = substream(seed, SCHEDULE_PROFILES)
        picks = []
        for _ in range(n_jobs):
            name = PROFILE_NAMES[int(gen.integers(0, len(PROFILE_NAMES)))]
            platform = "P" if int(gen.integers(0, 2)) == 0 else "T"
            picks.append((name, platform))
        scales = [ITERATION_SCALE[name] for name, _ in picks]

    budget_gen = substream(seed, SCHEDULE_BUDGETS)
    jobs = []
    for (name, platform), scale, off in zip(picks, scales, offsets):
        stretch = 1.0 + budget_jitter * float(budget_gen.uniform(-1.0, 1.0))
        budget = max(1, round(total_iterations * scale * stretch))
        profile = calibrate_profile(name, budget, platform=platform, **profile_kwargs)
        jobs.append(ScheduledJob(profile, off))
    return SubmissionSchedule(kind=kind, param=param, jobs=tuple(jobs))
