"""Named RNG substreams derived from a single root seed.

Every random concern in a scenario (submission offsets, profile picks,
per-container loss noise, checkpoint overhead draws) gets its own stream,
so adding draws to one concern never perturbs another.
"""

from __future__ import annotations

import numpy as np

# stream tags; part of the reproducibility contract, do not renumber
SCHEDULE_OFFSETS = 1
SCHEDULE_PROFILES = 2
LOSS_NOISE = 3
OVERHEAD = 4
SCHEDULE_BUDGETS = 5


def substream(root_seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by an integer key path."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


class IterationNoise:
    """Unit-normal noise indexed by whole training iterations.

    The draw for iteration ``i`` of one container is a pure function of
    (root seed, container id, i): observing the loss at iteration i gives
    the same value no matter when, or how often, it is sampled.
    """

    def __init__(self, root_seed: int, container: int):
        self._root = int(root_seed)
        self._container = int(container)

    def z(self, iteration: int) -> float:
        gen = substream(self._root, LOSS_NOISE, self._container, int(iteration))
        return float(gen.standard_normal())
