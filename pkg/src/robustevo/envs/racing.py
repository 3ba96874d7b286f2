"""Car racing on a closed track made of straights and circular arcs.

The car is a point mass moving in curvilinear coordinates along the track
centerline: arc position ``s``, lateral offset ``ell`` (positive to the left)
and heading offset ``psi`` from the centerline tangent. Longitudinal dynamics
use gear-dependent traction, quadratic drag and a brake; gears shift
automatically with hysteresis. All physics lives in compiled helpers so that
the per-step Python path and the batch kernel share one implementation.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numba
import numpy as np

from ..net import NetworkTopology, network_step
from .base import Environment

logger = logging.getLogger(__name__)

STRAIGHT, RIGHT, LEFT = 0, 1, 2
CLASS_NAMES = {"straight": STRAIGHT, "right": RIGHT, "left": LEFT}

UPSHIFT_KMH = (67.0, 114.0, 166.0, 212.0, 246.0)      # leaving gears 1..5
DOWNSHIFT_KMH = (53.0, 100.0, 152.0, 198.0, 232.0)    # leaving gears 2..6

DT = 0.004
N_STEPS = 50_000
KAPPA_MAX = 0.1
TOPOLOGY = NetworkTopology(12, 10, 2)

# indices into the car state vector
S, ELL, PSI, V, GEAR, N_OUT, SPIN_RUN, SPIN, DIST = range(9)


@dataclass(frozen=True)
class CarParams:
    accel: tuple = (9.0, 7.5, 6.0, 5.0, 4.2, 3.6)   # traction per gear, m/s^2
    drag: float = 3.6 / 80.0 ** 2                    # 1/m; top speed 80 m/s in 6th
    brake: float = 12.0                              # m/s^2
    steer_gain: float = 0.35                         # max steering angle, rad
    wheelbase: float = 2.6                           # m
    grip: float = 14.7                               # max lateral acceleration, m/s^2
    slip_time: float = 0.1                           # s of outward slide per unit excess
    v_max: float = 300.0 / 3.6                       # speed sensor full scale, m/s
    barrier_margin: float = 2.0                      # m beyond the track edge
    tailspin_steps: int = 25

    def as_array(self) -> np.ndarray:
        return np.array([*self.accel, self.drag, self.brake, self.steer_gain,
                         self.wheelbase, self.grip, self.slip_time, self.v_max,
                         float(self.tailspin_steps)])


@dataclass
class TrackSpec:
    width: float
    classes: np.ndarray
    lengths: np.ndarray
    curvatures: np.ndarray  # signed, positive = left
    starts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        self.lengths = np.asarray(self.lengths, dtype=float)
        self.curvatures = np.asarray(self.curvatures, dtype=float)
        if len(self.lengths) == 0:
            raise ValueError("track needs at least one segment")
        if np.any(self.lengths <= 0):
            raise ValueError("segment lengths must be positive")
        if self.width <= 0:
            raise ValueError("track width must be positive")
        for c, k in zip(self.classes, self.curvatures):
            if (c == STRAIGHT) != (k == 0) or (c == LEFT and k < 0) or (c == RIGHT and k > 0):
                raise ValueError("segment class and curvature disagree")
        if np.any(np.abs(self.curvatures) * self.width / 2 >= 1):
            raise ValueError("track too wide for its tightest curve")
        turn = float(np.sum(self.curvatures * self.lengths)) / (2 * math.pi)
        if abs(turn - round(turn)) > 1e-6:
            raise ValueError(f"track does not close: total heading change {turn:.6f} turns")
        self.starts = np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])

    @property
    def length(self) -> float:
        return float(np.sum(self.lengths))

    def barrier(self, margin: float) -> float:
        """Lateral offset at which the car is stopped from leaving further."""
        kmax = float(np.max(np.abs(self.curvatures)))
        limit = self.width / 2 + margin
        return limit if kmax == 0 else min(limit, 0.9 / kmax)

    @classmethod
    def parse(cls, text: str) -> "TrackSpec":
        width = None
        classes, lengths, curvatures = [], [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "width":
                width = float(parts[1])
                continue
            if len(parts) != 3 or parts[0] not in CLASS_NAMES:
                raise ValueError(f"line {lineno}: expected 'class length curvature', got {raw!r}")
            c = CLASS_NAMES[parts[0]]
            k = abs(float(parts[2]))
            classes.append(c)
            lengths.append(float(parts[1]))
            curvatures.append(-k if c == RIGHT else k)
        if width is None:
            raise ValueError("track file has no 'width' line")
        return cls(width, classes, lengths, curvatures)

    @classmethod
    def load(cls, path) -> "TrackSpec":
        return cls.parse(Path(path).read_text())

    @classmethod
    def default(cls) -> "TrackSpec":
        return cls.parse(resources.files("robustevo.data").joinpath("default_track.txt").read_text())

    def dumps(self) -> str:
        names = {v: k for k, v in CLASS_NAMES.items()}
        lines = [f"width {float(self.width)!r}"]
        for c, l, k in zip(self.classes, self.lengths, self.curvatures):
            lines.append(f"{names[int(c)]} {float(l)!r} {abs(float(k))!r}")
        return "\n".join(lines) + "\n"

    def mirrored(self) -> "TrackSpec":
        swap = {STRAIGHT: STRAIGHT, LEFT: RIGHT, RIGHT: LEFT}
        return TrackSpec(self.width, [swap[int(c)] for c in self.classes],
                         self.lengths.copy(), -self.curvatures)


def race_fitness(d, n_out, n_steps, tailspin, penalty="literal") -> float:
    """Distance raced, discounted for time off track and for tailspins.

    ``penalty="literal"`` uses ``n_out**2 / N``; ``"ratio_squared"`` uses
    ``(n_out / N)**2``. The off-track factor is floored at zero.
    """
    if n_steps <= 0 or not 0 <= n_out <= n_steps:
        raise ValueError("need 0 <= n_out <= n_steps and n_steps > 0")
    if penalty == "literal":
        out_term = n_out * n_out / n_steps
    elif penalty == "ratio_squared":
        out_term = (n_out / n_steps) ** 2
    else:
        raise ValueError(f"unknown penalty {penalty!r}")
    return d * max(0.0, 1.0 - 0.25 * out_term) * (1.0 - 0.25 * float(tailspin))


@numba.njit(cache=True)
def _gear_update(v_kmh, gear):
    if gear <= 5 and v_kmh > UPSHIFT_KMH[gear - 1]:
        return gear + 1
    if gear >= 2 and v_kmh < DOWNSHIFT_KMH[gear - 2]:
        return gear - 1
    return gear


def gear_update(v_kmh: float, gear: int) -> int:
    """Automatic gearbox: at most one shift per call, upshift checked first."""
    if gear not in range(1, 7):
        raise ValueError("gear must be in 1..6")
    return int(_gear_update(float(v_kmh), int(gear)))


@numba.njit(cache=True)
def _locate(s, starts, total):
    pos = s % total
    i = np.searchsorted(starts, pos, side="right") - 1
    if i < 0:
        i = 0
    return i


@numba.njit(cache=True)
def _sensors(car, starts, classes, curvatures, total, width, v_max, out):
    i = _locate(car[0], starts, total)
    j = (i + 1) % starts.shape[0]
    half = width / 2.0
    out[0] = min(1.0, max(0.0, 0.4 + 0.4 * car[1] / half))
    out[1] = min(1.0, max(0.0, 0.4 - 0.4 * car[1] / half))
    out[2] = (car[2] + math.pi) / (2.0 * math.pi)
    out[3] = min(1.0, car[3] / v_max)
    _segment_units(classes[i], curvatures[i], out, 4)
    _segment_units(classes[j], curvatures[j], out, 8)


@numba.njit(cache=True)
def _segment_units(cls, kappa, out, k):
    out[k] = 1.0 if cls == LEFT else 0.0
    out[k + 1] = 1.0 if cls == RIGHT else 0.0
    out[k + 2] = min(1.0, max(0.0, kappa) / KAPPA_MAX)
    out[k + 3] = min(1.0, max(0.0, -kappa) / KAPPA_MAX)


@numba.njit(cache=True)
def _car_step(car, steer, pedal, starts, curvatures, total, width, barrier, params, dt):
    s, ell, psi, v = car[0], car[1], car[2], car[3]
    gear = int(car[4])
    accel = params[gear - 1]
    drag, brake, steer_gain, wheelbase = params[6], params[7], params[8], params[9]
    grip, slip_time, spin_limit = params[10], params[11], params[13]

    kappa = curvatures[_locate(s, starts, total)]
    if pedal > 0.5:
        a = accel * 2.0 * (pedal - 0.5)
    else:
        a = -brake * 2.0 * (0.5 - pedal)
    a -= drag * v * v

    kappa_cmd = steer_gain * steer / wheelbase
    excess = v * v * abs(kappa_cmd) - grip
    if excess > 0.0:
        limit = grip / (v * v)
        kappa_car = min(max(kappa_cmd, -limit), limit)
        drift = -math.copysign(excess * slip_time, kappa_cmd)
    else:
        kappa_car = kappa_cmd
        drift = 0.0

    denom = 1.0 - ell * kappa
    s_dot = v * math.cos(psi) / denom
    psi_dot = v * kappa_car - kappa * s_dot
    ell_dot = v * math.sin(psi) + drift

    v_new = v + a * dt
    if v_new < 0.0:
        v_new = 0.0
    ell_new = ell + ell_dot * dt
    if ell_new > barrier:
        ell_new = barrier
    elif ell_new < -barrier:
        ell_new = -barrier
    psi_new = psi + psi_dot * dt
    psi_new = (psi_new + math.pi) % (2.0 * math.pi) - math.pi

    car[0] = s + s_dot * dt
    car[1] = ell_new
    car[2] = psi_new
    car[3] = v_new
    car[4] = _gear_update(v_new * 3.6, gear)
    if abs(ell_new) > width / 2.0:
        car[5] += 1.0
    if abs(psi_new) > math.pi / 2.0:
        car[6] += 1.0
        if car[6] >= spin_limit:
            car[7] = 1.0
    else:
        car[6] = 0.0
    car[8] += s_dot * dt


@numba.njit(cache=True)
def _episode_kernel(genome, n_internal, s0, n_steps, starts, classes, curvatures,
                    total, width, barrier, params, dt):
    car = np.zeros(9)
    car[0] = s0
    car[4] = 1.0
    inputs = np.empty(12)
    state = np.zeros(n_internal)
    scratch = np.empty(n_internal)
    motors = np.empty(2)
    for _ in range(n_steps):
        _sensors(car, starts, classes, curvatures, total, width, params[12], inputs)
        network_step(genome, 12, n_internal, 2, inputs, state, scratch, motors)
        _car_step(car, 2.0 * motors[0] - 1.0, motors[1], starts, curvatures,
                  total, width, barrier, params, dt)
        for k in range(9):
            if not math.isfinite(car[k]):
                car[8] = math.nan
                return car
    return car


class Racing(Environment):
    """Racing environment; the single varied condition is the start position.

    Parameters
    ----------
    track : TrackSpec, optional
        Defaults to the bundled club circuit.
    n_steps : int
        Simulation steps per episode (the fitness ``N``).
    penalty : {"literal", "ratio_squared"}
        Off-track penalty form passed to :func:`race_fitness`.
    """

    name = "racing"

    def __init__(self, track=None, n_steps=N_STEPS, dt=DT, car=None, n_internal=10,
                 penalty="literal"):
        self.track = track if track is not None else TrackSpec.default()
        self.n_steps = int(n_steps)
        self.dt = float(dt)
        self.car = car or CarParams()
        self.penalty = penalty
        self.topology = NetworkTopology(12, n_internal, 2)
        self.condition_ranges = np.array([[0.0, self.track.length]])
        self._params = self.car.as_array()
        self._barrier = self.track.barrier(self.car.barrier_margin)

    def _track_args(self):
        t = self.track
        return t.starts, t.classes, t.curvatures, t.length, t.width

    def new_car(self, s0=0.0) -> np.ndarray:
        car = np.zeros(9)
        car[S] = s0
        car[GEAR] = 1
        return car

    def sensors(self, car) -> np.ndarray:
        out = np.empty(12)
        starts, classes, curvatures, total, width = self._track_args()
        _sensors(np.asarray(car, dtype=float), starts, classes, curvatures, total, width,
                 self.car.v_max, out)
        return out

    def car_step(self, car, steer, pedal) -> np.ndarray:
        """Advance a copy of ``car`` by one step of ``dt``."""
        car = np.array(car, dtype=float)
        steer = min(1.0, max(-1.0, float(steer)))
        pedal = min(1.0, max(0.0, float(pedal)))
        t = self.track
        _car_step(car, steer, pedal, t.starts, t.curvatures, t.length, t.width,
                  self._barrier, self._params, self.dt)
        if not np.all(np.isfinite(car)):
            raise FloatingPointError("non-finite car state")
        return car

    def _score(self, car) -> float:
        if not np.all(np.isfinite(car)):
            logger.warning("non-finite car state; episode scored 0")
            return 0.0
        return race_fitness(car[DIST], int(car[N_OUT]), self.n_steps, car[SPIN], self.penalty)

    def run_episode(self, controller, conditions, trajectory=None) -> float:
        """Race for ``n_steps`` steps from start position ``conditions[0]``.

        With ``trajectory`` a list, rows ``(step, s, ell, psi, v, gear, out)``
        are appended.
        """
        s0 = float(np.atleast_1d(conditions)[0])
        controller.reset()
        car = self.new_car(s0)
        half = self.track.width / 2
        for step in range(self.n_steps):
            motors = controller.activate(self.sensors(car))
            try:
                car = self.car_step(car, 2.0 * motors[0] - 1.0, motors[1])
            except FloatingPointError:
                logger.warning("non-finite car state at step %d; episode scored 0", step)
                return 0.0
            if trajectory is not None:
                trajectory.append((step, car[S], car[ELL], car[PSI], car[V], int(car[GEAR]),
                                   int(abs(car[ELL]) > half)))
        return self._score(car)

    def evaluate_batch(self, genomes, rows) -> np.ndarray:
        genomes = np.ascontiguousarray(np.atleast_2d(genomes), dtype=float)
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        t = self.track
        out = np.empty((len(genomes), len(rows)))
        for i, g in enumerate(genomes):
            for j, row in enumerate(rows):
                car = _episode_kernel(g, self.topology.n_internal, float(row[0]), self.n_steps,
                                      t.starts, t.classes, t.curvatures, t.length, t.width,
                                      self._barrier, self._params, self.dt)
                out[i, j] = self._score(car)
        return out


def write_trajectory_csv(path, trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "s", "ell", "psi", "v", "gear", "out_flag"])
        w.writerows(trajectory)
