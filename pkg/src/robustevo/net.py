"""Fixed-topology recurrent controllers.

Genome layout (all blocks row-major)::

    [ sensor+bias -> internal | internal -> internal | internal -> motor | bias -> motor ]
      n_internal x (n_sensors + 1)   n_internal x n_internal   n_motors x n_internal   n_motors

Within the first block the bias weight is the last entry of each row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np


@dataclass(frozen=True)
class NetworkTopology:
    n_sensors: int
    n_internal: int
    n_motors: int

    def __post_init__(self):
        for name in ("n_sensors", "n_internal", "n_motors"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_params(self) -> int:
        return param_count(self)


def param_count(topology: NetworkTopology) -> int:
    s, h, m = topology.n_sensors, topology.n_internal, topology.n_motors
    return (s + 1) * h + h * h + (h + 1) * m


def split_genome(topology: NetworkTopology, genome):
    """Return ``(w_in, w_rec, w_out, b_out)`` views into a flat genome."""
    genome = np.asarray(genome, dtype=float)
    if genome.ndim != 1 or genome.size != param_count(topology):
        raise ValueError(
            f"genome has {genome.size} values, topology {topology} needs "
            f"{param_count(topology)}"
        )
    s, h, m = topology.n_sensors, topology.n_internal, topology.n_motors
    i = 0
    w_in = genome[i:i + h * (s + 1)].reshape(h, s + 1)
    i += h * (s + 1)
    w_rec = genome[i:i + h * h].reshape(h, h)
    i += h * h
    w_out = genome[i:i + m * h].reshape(m, h)
    i += m * h
    b_out = genome[i:i + m]
    return w_in, w_rec, w_out, b_out


class RecurrentNetwork:
    """Fully connected recurrent controller with persistent internal state.

    Internal neurons use ``tanh`` and see the sensors, a constant bias input
    and their own activations from the previous call. Motor neurons use the
    logistic function so outputs lie in ``(0, 1)``.

    Parameters
    ----------
    topology : NetworkTopology
    genome : array-like of shape (param_count(topology),)
    """

    def __init__(self, topology: NetworkTopology, genome):
        genome = np.array(genome, dtype=float)
        if not np.all(np.isfinite(genome)):
            raise ValueError("genome contains non-finite values")
        self.topology = topology
        self.genome = genome
        split_genome(topology, genome)
        self.state = np.zeros(topology.n_internal)
        self._scratch = np.empty(topology.n_internal)

    def reset(self) -> None:
        self.state = np.zeros(self.topology.n_internal)

    def activate(self, sensor_values) -> np.ndarray:
        x = np.asarray(sensor_values, dtype=float)
        if x.shape != (self.topology.n_sensors,):
            raise ValueError(
                f"expected {self.topology.n_sensors} sensor values, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("sensor values must be finite")
        # share the compiled step so Python-level episodes match the batch kernels bit for bit
        out = np.empty(self.topology.n_motors)
        t = self.topology
        network_step(self.genome, t.n_sensors, t.n_internal, t.n_motors, x, self.state,
                     self._scratch, out)
        return out

    def copy(self) -> "RecurrentNetwork":
        clone = RecurrentNetwork(self.topology, self.genome)
        clone.state = self.state.copy()
        return clone


@numba.njit(cache=True)
def network_step(genome, n_sensors, n_internal, n_motors, inputs, state, scratch, out):
    """One network update; the episode kernels and :meth:`RecurrentNetwork.activate` both use it.

    ``state`` is updated in place; ``scratch`` needs ``n_internal`` slots.
    """
    p = 0
    for i in range(n_internal):
        acc = 0.0
        for j in range(n_sensors):
            acc += genome[p] * inputs[j]
            p += 1
        acc += genome[p]
        p += 1
        scratch[i] = acc
    for i in range(n_internal):
        acc = scratch[i]
        for j in range(n_internal):
            acc += genome[p] * state[j]
            p += 1
        scratch[i] = acc
    for i in range(n_internal):
        state[i] = math.tanh(scratch[i])
    bias_at = p + n_motors * n_internal
    for k in range(n_motors):
        acc = genome[bias_at + k]
        for j in range(n_internal):
            acc += genome[p] * state[j]
            p += 1
        out[k] = 1.0 / (1.0 + math.exp(-acc))


def save_genome(path, topology: NetworkTopology, genome) -> None:
    genome = np.asarray(genome, dtype=float)
    split_genome(topology, genome)
    lines = [f"{topology.n_sensors} {topology.n_internal} {topology.n_motors}"]
    lines += [repr(float(v)) for v in genome]
    Path(path).write_text("\n".join(lines) + "\n")


def load_genome(path):
    """Read a genome file; returns ``(topology, genome)``."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty genome file")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"{path}: bad topology header {lines[0]!r}")
    topology = NetworkTopology(*(int(v) for v in header))
    genome = np.array([float(v) for v in lines[1:]])
    split_genome(topology, genome)
    return topology, genome
