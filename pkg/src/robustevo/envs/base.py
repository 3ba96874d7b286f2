from __future__ import annotations

import numpy as np

from ..net import NetworkTopology, RecurrentNetwork


class Environment:
    """Episode simulator driven by a recurrent controller.

    Subclasses define ``topology``, ``condition_ranges`` (an ``(NP, 2)``
    array) and ``run_episode``. ``evaluate_batch`` may be overridden with a
    faster kernel; it must return exactly what ``run_episode`` would.
    """

    name = "base"
    topology: NetworkTopology
    condition_ranges: np.ndarray

    @property
    def n_conditions(self) -> int:
        return len(self.condition_ranges)

    def controller(self, genome) -> RecurrentNetwork:
        return RecurrentNetwork(self.topology, genome)

    def run_episode(self, controller, conditions) -> float:
        raise NotImplementedError

    def evaluate_batch(self, genomes, rows) -> np.ndarray:
        """Scores of every genome on every condition row, shape ``(len(genomes), len(rows))``."""
        genomes = np.atleast_2d(np.asarray(genomes, dtype=float))
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        out = np.empty((len(genomes), len(rows)))
        for i, g in enumerate(genomes):
            net = self.controller(g)
            for j, row in enumerate(rows):
                out[i, j] = self.run_episode(net, row)
        return out
