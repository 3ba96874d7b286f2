"""Double-pole balancing on a cart with randomized initial states.

The poles are hinged independently on the cart (frictionless). Angles are
measured from the upright position, so the unactuated system is unstable.
State order everywhere: ``(x, x_dot, theta1, theta1_dot, theta2, theta2_dot)``.
"""

from __future__ import annotations

import csv
import logging
import math

import numba
import numpy as np

from ..net import NetworkTopology, network_step
from ..validation import check_conditions
from .base import Environment

logger = logging.getLogger(__name__)

CART_MASS = 1.0
POLE_MASS = (0.5, 0.25)
POLE_HALF_LENGTH = (0.5, 0.25)  # full lengths 1.0 m and 0.5 m
GRAVITY = 9.8
DT = 0.01
SUBSTEPS = 2  # 50 Hz control
MAX_FORCE = 10.0
MAX_STEPS = 1000
X_LIMIT = 2.4
THETA_LIMIT = math.pi / 5

SENSOR_X_GAIN = 0.5 / X_LIMIT
SENSOR_THETA_GAIN = 25.0 / 13.5  # maps pi/5 onto 5*pi/13.5

INITIAL_RANGES = np.array([
    [-1.944, 1.944],
    [-1.215, 1.215],
    [-0.0472, 0.0472],
    [-0.135088, 0.135088],
    [-0.10472, 0.10472],
    [-0.135088, 0.135088],
])

TOPOLOGY = NetworkTopology(3, 10, 1)


@numba.njit(cache=True)
def _derivative(s, force, out):
    m1, m2 = 0.5, 0.25
    l1, l2 = 0.5, 0.25
    g = 9.8
    c1, s1 = math.cos(s[2]), math.sin(s[2])
    c2, s2 = math.cos(s[4]), math.sin(s[4])
    eff1 = m1 * (1.0 - 0.75 * c1 * c1)
    eff2 = m2 * (1.0 - 0.75 * c2 * c2)
    f1 = m1 * l1 * s[3] * s[3] * s1 - 0.75 * m1 * g * s1 * c1
    f2 = m2 * l2 * s[5] * s[5] * s2 - 0.75 * m2 * g * s2 * c2
    xdd = (force + f1 + f2) / (1.0 + eff1 + eff2)
    out[0] = s[1]
    out[1] = xdd
    out[2] = s[3]
    out[3] = 0.75 / l1 * (g * s1 - xdd * c1)
    out[4] = s[5]
    out[5] = 0.75 / l2 * (g * s2 - xdd * c2)


@numba.njit(cache=True)
def _rk4(s, force, dt, k1, k2, k3, k4, tmp):
    _derivative(s, force, k1)
    for i in range(6):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _derivative(tmp, force, k2)
    for i in range(6):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _derivative(tmp, force, k3)
    for i in range(6):
        tmp[i] = s[i] + dt * k3[i]
    _derivative(tmp, force, k4)
    for i in range(6):
        s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def dynamics(state, force) -> np.ndarray:
    """Time derivative of the state under a constant horizontal force (N)."""
    out = np.empty(6)
    _derivative(np.asarray(state, dtype=float), float(force), out)
    return out


def rk4_step(state, force, dt=DT) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = np.array(state, dtype=float)
    scratch = np.empty((5, 6))
    _rk4(s, float(force), dt, *scratch)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("double-pole integration produced a non-finite state")
    return s


def energy(state) -> float:
    """Total mechanical energy (J); conserved when no force is applied."""
    x, xd, t1, t1d, t2, t2d = (float(v) for v in state)
    e = 0.5 * CART_MASS * xd * xd
    for m, l, t, td in ((POLE_MASS[0], POLE_HALF_LENGTH[0], t1, t1d),
                        (POLE_MASS[1], POLE_HALF_LENGTH[1], t2, t2d)):
        vx = xd + l * td * math.cos(t)
        vy = -l * td * math.sin(t)
        e += 0.5 * m * (vx * vx + vy * vy) + 0.5 * (m * l * l / 3.0) * td * td
        e += m * GRAVITY * l * math.cos(t)
    return e


def sensors(state) -> np.ndarray:
    return np.array([state[0] * SENSOR_X_GAIN,
                     state[2] * SENSOR_THETA_GAIN,
                     state[4] * SENSOR_THETA_GAIN])


def is_valid(state) -> bool:
    return (abs(state[0]) <= X_LIMIT and abs(state[2]) <= THETA_LIMIT
            and abs(state[4]) <= THETA_LIMIT)


def run_episode(controller, conditions, trajectory=None) -> float:
    """Fraction of the 1000 control steps survived from the given initial state.

    ``controller`` needs ``reset()`` and ``activate(sensors) -> motors``.
    If ``trajectory`` is a list, one row per control step is appended:
    ``(step, x, x_dot, th1, th1_dot, th2, th2_dot, force)``.
    """
    state = np.array(conditions, dtype=float)
    if state.shape != (6,):
        raise ValueError("double-pole conditions need 6 values")
    controller.reset()
    scratch = np.empty((5, 6))
    survived = 0
    for step in range(MAX_STEPS):
        motor = controller.activate(sensors(state))[0]
        force = (2.0 * motor - 1.0) * MAX_FORCE
        for _ in range(SUBSTEPS):
            _rk4(state, force, DT, *scratch)
        if trajectory is not None:
            trajectory.append((step, *state.tolist(), force))
        if not np.all(np.isfinite(state)):
            logger.warning("non-finite double-pole state at step %d; scoring 0", step)
            return 0.0
        if not is_valid(state):
            break
        survived += 1
    return survived / MAX_STEPS


def write_trajectory_csv(path, trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x", "x_dot", "theta1", "theta1_dot", "theta2", "theta2_dot", "force"])
        w.writerows(trajectory)


@numba.njit(cache=True)
def _episode_kernel(genome, init, n_internal):
    s = init.copy()
    state = np.zeros(n_internal)
    scratch = np.empty(n_internal)
    inputs = np.empty(3)
    motor = np.empty(1)
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    survived = 0
    for _ in range(1000):
        inputs[0] = s[0] * (0.5 / 2.4)
        inputs[1] = s[2] * (25.0 / 13.5)
        inputs[2] = s[4] * (25.0 / 13.5)
        network_step(genome, 3, n_internal, 1, inputs, state, scratch, motor)
        force = (2.0 * motor[0] - 1.0) * 10.0
        for _sub in range(2):
            _rk4(s, force, 0.01, k1, k2, k3, k4, tmp)
        for i in range(6):
            if not math.isfinite(s[i]):
                return -1.0
        if abs(s[0]) > 2.4 or abs(s[2]) > math.pi / 5 or abs(s[4]) > math.pi / 5:
            break
        survived += 1
    return survived / 1000.0


@numba.njit(cache=True)
def _batch_kernel(genomes, rows, n_internal):
    out = np.empty((genomes.shape[0], rows.shape[0]))
    for i in range(genomes.shape[0]):
        for j in range(rows.shape[0]):
            out[i, j] = _episode_kernel(genomes[i], rows[j], n_internal)
    return out


class DoublePole(Environment):
    """Extended double-pole balancing; six varied initial-state parameters."""

    name = "cartpole2"

    def __init__(self, n_internal: int = 10):
        self.topology = NetworkTopology(3, n_internal, 1)
        self.condition_ranges = INITIAL_RANGES.copy()

    def run_episode(self, controller, conditions) -> float:
        return run_episode(controller, conditions)

    def evaluate_batch(self, genomes, rows) -> np.ndarray:
        genomes = np.ascontiguousarray(np.atleast_2d(genomes), dtype=float)
        rows = check_conditions(rows)
        if genomes.shape[1] != self.topology.n_params:
            raise ValueError(f"genomes need {self.topology.n_params} values")
        out = _batch_kernel(genomes, np.ascontiguousarray(rows), self.topology.n_internal)
        if np.any(out < 0):
            logger.warning("non-finite double-pole state in %d episode(s); scoring 0",
                           int(np.sum(out < 0)))
            out[out < 0] = 0.0
        return out
