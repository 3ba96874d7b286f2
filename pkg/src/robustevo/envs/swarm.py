"""Collective foraging with ten identical differential-drive robots.

Robots collect invisible food from a 20x20 grid of cells and release it in a
circular nest, under an energy budget that is refilled only inside the nest.
Every per-robot computation is independent of robot ordering (neighbour sums
are taken over sorted values, conflicts are settled geometrically), so
permuting the robots permutes the trajectories and leaves the score intact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from ..net import NetworkTopology, network_step, split_genome
from .base import Environment

ARENA = 5.0
N_ROBOTS = 10
ROBOT_RADIUS = 0.17
NEST_RADIUS = 0.4
NEST_WALL_CLEARANCE = 1.0
START_HALF = 0.5
CELL = 0.25
N_CELLS = 20
DT = 0.1
N_STEPS = 1000
V_MAX = 0.3
AXLE = 0.29
IR_RANGE = 0.15
GROUND_OFFSET = 0.1
ENERGY_TICKS = 100  # energy is stored in hundredths; one tick lost per step outside the nest
CAMERA_SECTOR = math.pi / 4

# 36 rays at 5 + 10k degrees; 8 groups of 4 adjacent rays near the compass points
_GROUP_CENTERS_DEG = (0, 50, 90, 140, 180, 220, 270, 310)
IR_GROUP_ANGLES = np.deg2rad(np.array(
    [[c + o for o in (-15, -5, 5, 15)] for c in _GROUP_CENTERS_DEG], dtype=float))

N_SENSORS = 15
TOPOLOGY = NetworkTopology(N_SENSORS, 10, 4)


def condition_ranges() -> np.ndarray:
    """Nest centre (2 values) then ``(dx, dy, heading)`` for each robot."""
    lo, hi = NEST_WALL_CLEARANCE, ARENA - NEST_WALL_CLEARANCE
    rows = [[lo, hi], [lo, hi]]
    for _ in range(N_ROBOTS):
        rows += [[-START_HALF, START_HALF], [-START_HALF, START_HALF], [-math.pi, math.pi]]
    return np.array(rows)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _sorted_sum(values, axis):
    return np.sort(values, axis=axis).sum(axis=axis)


def separate(points, center, half=START_HALF, min_dist=2 * ROBOT_RADIUS, max_iter=5000):
    """Push start positions apart until no two discs overlap.

    Points stay inside the square of half-width ``half`` around ``center``;
    if the relaxation stalls the square is widened a little. Deterministic
    and independent of point order (unless points coincide exactly).
    """
    p = np.array(points, dtype=float)
    goal = min_dist + 1e-6  # aim a little past the limit so the loop terminates
    # coincident points have no separating direction; give each pair a fixed,
    # antisymmetric one
    n = len(p)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    angle = 2.399963 * (np.minimum(i, j) * n + np.maximum(i, j))
    fallback = np.sign(j - i)[..., None] * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
    for it in range(max_iter):
        diff = p[:, None, :] - p[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() >= min_dist:
            return p
        overlap = np.clip(goal - dist, 0.0, None) / 2
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(dist[..., None] > 0, diff / dist[..., None], fallback)
        push = _sorted_sum(unit * overlap[..., None] * 1.01, axis=1)
        bound = half + 0.05 * (it // 500)
        p = np.clip(p + push, center - bound, center + bound)
    raise RuntimeError("could not separate robot start positions")


@dataclass
class World:
    nest: np.ndarray
    pos: np.ndarray
    heading: np.ndarray
    energy_ticks: np.ndarray
    carried: np.ndarray
    led_red: np.ndarray
    led_blue: np.ndarray
    cell: np.ndarray
    food: np.ndarray
    released: int = 0
    steps: int = 0

    @property
    def energy(self) -> np.ndarray:
        return self.energy_ticks / ENERGY_TICKS

    @property
    def n_robots(self) -> int:
        return len(self.pos)

    def food_total(self) -> int:
        return int(self.food.sum() + self.carried.sum() + self.released)

    def in_nest(self, points=None) -> np.ndarray:
        points = self.pos if points is None else points
        return np.sum((points - self.nest) ** 2, axis=-1) <= NEST_RADIUS ** 2

    def copy(self) -> "World":
        return World(**{k: (v.copy() if isinstance(v, np.ndarray) else v)
                        for k, v in self.__dict__.items()})


def _cell_of(pos):
    idx = np.clip(np.floor(pos / CELL).astype(int), 0, N_CELLS - 1)
    return idx[:, 0] * N_CELLS + idx[:, 1]


def make_world(conditions=None, nest=None, poses=None) -> World:
    """Build a fresh world from a condition row, or from explicit nest/poses.

    Explicit ``poses`` are ``(n, 3)`` absolute ``(x, y, heading)`` and are used
    as given (no separation), which is handy for hand-made scenes.
    """
    if conditions is not None:
        c = np.asarray(conditions, dtype=float)
        if c.shape != (2 + 3 * N_ROBOTS,):
            raise ValueError(f"swarm conditions need {2 + 3 * N_ROBOTS} values")
        nest = c[:2]
        offsets = c[2:].reshape(N_ROBOTS, 3)
        pos = separate(nest + offsets[:, :2], nest)
        heading = offsets[:, 2].copy()
    else:
        nest = np.asarray(nest, dtype=float)
        poses = np.atleast_2d(np.asarray(poses, dtype=float))
        pos, heading = poses[:, :2].copy(), poses[:, 2].copy()
    n = len(pos)
    return World(
        nest=np.array(nest, dtype=float), pos=pos, heading=heading,
        energy_ticks=np.full(n, ENERGY_TICKS), carried=np.zeros(n, dtype=int),
        led_red=np.zeros(n, dtype=bool), led_blue=np.zeros(n, dtype=bool),
        cell=_cell_of(pos), food=np.ones((N_CELLS, N_CELLS), dtype=bool).ravel(),
    )


def _ir(world: World) -> np.ndarray:
    n = world.n_robots
    angles = world.heading[:, None, None] + IR_GROUP_ANGLES[None]          # (n, 8, 4)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=-1)                # (n, 8, 4, 2)
    origin = world.pos[:, None, None, :] + ROBOT_RADIUS * d
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = np.where(d < 0, (0.0 - origin) / d, np.inf)
        t_hi = np.where(d > 0, (ARENA - origin) / d, np.inf)
    t = np.minimum(t_lo, t_hi).min(axis=-1)                                # walls
    t = np.maximum(t, 0.0)
    if n > 1:
        rel = world.pos[None, None, None, :, :] - origin[..., None, :]     # (n, 8, 4, n, 2)
        b = np.sum(rel * d[..., None, :], axis=-1)
        c = np.sum(rel * rel, axis=-1) - ROBOT_RADIUS ** 2
        disc = b * b - c
        hit = np.maximum(b - np.sqrt(np.clip(disc, 0.0, None)), 0.0)
        valid = (disc >= 0) & ((b >= 0) | (c <= 0))
        valid &= ~np.eye(n, dtype=bool)[:, None, None, :]
        t = np.minimum(t, np.where(valid, hit, np.inf).min(axis=-1))
    value = np.clip(1.0 - t / IR_RANGE, 0.0, 1.0)
    return value.mean(axis=-1)


def _camera(world: World) -> np.ndarray:
    """(red-left, blue-left, red-right, blue-right) angular coverage fractions."""
    n = world.n_robots
    out = np.zeros((n, 4))
    if n < 2:
        return out
    rel = world.pos[None, :, :] - world.pos[:, None, :]                    # i observes j
    dist = np.sqrt(np.sum(rel * rel, axis=-1))
    np.fill_diagonal(dist, np.inf)
    bearing = np.arctan2(rel[..., 1], rel[..., 0])
    half = np.arcsin(np.clip(ROBOT_RADIUS / dist, 0.0, 1.0))
    b_rel = _wrap(bearing - world.heading[:, None])
    delta = _wrap(bearing + np.pi - world.heading[None, :])
    # red: visible-half parameter gamma in [g0, g1]; apparent offset is -half*sin(gamma)
    g0 = np.where(delta >= 0, -np.pi / 2, -np.pi / 2 - delta)
    g1 = np.where(delta >= 0, np.pi / 2 - delta, np.pi / 2)
    red = (b_rel - half * np.sin(g1), b_rel - half * np.sin(g0))
    bg0 = np.where(delta >= 0, np.pi / 2 - delta, -np.pi / 2)
    bg1 = np.where(delta >= 0, np.pi / 2, -np.pi / 2 - delta)
    blue = (b_rel - half * np.sin(bg1), b_rel - half * np.sin(bg0))
    sectors = ((0.0, CAMERA_SECTOR), (-CAMERA_SECTOR, 0.0))
    col = 0
    for lo, hi in sectors:
        for (a, b), lit in ((red, world.led_red), (blue, world.led_blue)):
            cover = np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)
            cover = np.where(lit[None, :] & np.isfinite(dist), cover, 0.0)
            out[:, col] = np.minimum(1.0, _sorted_sum(cover, axis=1) / CAMERA_SECTOR)
            col += 1
    return out


@numba.njit(cache=True)
def _interval_cover(a, b, lo, hi):
    return max(0.0, min(b, hi) - max(a, lo))


@numba.njit(cache=True)
def _sense_kernel(pos, heading, red, blue, nest, energy, ray_angles, out):
    n = pos.shape[0]
    r = ROBOT_RADIUS
    pi = math.pi
    tau = 2.0 * math.pi
    cover = np.empty((4, n))
    for i in range(n):
        # infrared
        for g in range(ray_angles.shape[0]):
            acc = 0.0
            for k in range(ray_angles.shape[1]):
                a = heading[i] + ray_angles[g, k]
                dx = math.cos(a)
                dy = math.sin(a)
                ox = pos[i, 0] + r * dx
                oy = pos[i, 1] + r * dy
                t = math.inf
                if dx < 0:
                    t = min(t, -ox / dx)
                elif dx > 0:
                    t = min(t, (ARENA - ox) / dx)
                if dy < 0:
                    t = min(t, -oy / dy)
                elif dy > 0:
                    t = min(t, (ARENA - oy) / dy)
                t = max(t, 0.0)
                for j in range(n):
                    if j == i:
                        continue
                    rx = pos[j, 0] - ox
                    ry = pos[j, 1] - oy
                    b = rx * dx + ry * dy
                    c = rx * rx + ry * ry - r * r
                    disc = b * b - c
                    if disc >= 0 and (b >= 0 or c <= 0):
                        t = min(t, max(b - math.sqrt(disc), 0.0))
                acc += min(1.0, max(0.0, 1.0 - t / IR_RANGE))
            out[i, g] = acc / ray_angles.shape[1]
        # camera
        for j in range(n):
            for q in range(4):
                cover[q, j] = 0.0
            if j == i or not (red[j] or blue[j]):
                continue
            rx = pos[j, 0] - pos[i, 0]
            ry = pos[j, 1] - pos[i, 1]
            dist = math.sqrt(rx * rx + ry * ry)
            bearing = math.atan2(ry, rx)
            half = math.asin(min(1.0, max(0.0, r / dist))) if dist > 0 else pi / 2
            b_rel = (bearing - heading[i] + pi) % tau - pi
            delta = (bearing + pi - heading[j] + pi) % tau - pi
            if delta >= 0:
                rg0, rg1 = -pi / 2, pi / 2 - delta
                bg0, bg1 = pi / 2 - delta, pi / 2
            else:
                rg0, rg1 = -pi / 2 - delta, pi / 2
                bg0, bg1 = -pi / 2, -pi / 2 - delta
            ra, rb = b_rel - half * math.sin(rg1), b_rel - half * math.sin(rg0)
            ba, bb = b_rel - half * math.sin(bg1), b_rel - half * math.sin(bg0)
            if red[j]:
                cover[0, j] = _interval_cover(ra, rb, 0.0, CAMERA_SECTOR)
                cover[2, j] = _interval_cover(ra, rb, -CAMERA_SECTOR, 0.0)
            if blue[j]:
                cover[1, j] = _interval_cover(ba, bb, 0.0, CAMERA_SECTOR)
                cover[3, j] = _interval_cover(ba, bb, -CAMERA_SECTOR, 0.0)
        for q in range(4):
            out[i, 8 + q] = min(1.0, np.sort(cover[q]).sum() / CAMERA_SECTOR)
        # ground and energy
        lx = -math.sin(heading[i])
        ly = math.cos(heading[i])
        for side in range(2):
            sgn = 1.0 if side == 0 else -1.0
            gx = pos[i, 0] + sgn * GROUND_OFFSET * lx - nest[0]
            gy = pos[i, 1] + sgn * GROUND_OFFSET * ly - nest[1]
            out[i, 12 + side] = 1.0 if gx * gx + gy * gy <= NEST_RADIUS ** 2 else 0.0
        out[i, 14] = energy[i]


def sense_all(world: World) -> np.ndarray:
    """Sensor vectors for every robot, shape ``(n, 15)``.

    Layout: 8 infrared groups, 4 camera values (red-left, blue-left,
    red-right, blue-right), 2 ground sensors (left, right), energy.
    """
    out = np.empty((world.n_robots, N_SENSORS))
    _sense_kernel(world.pos, world.heading, world.led_red, world.led_blue, world.nest,
                  world.energy, IR_GROUP_ANGLES, out)
    return out


def sense_all_reference(world: World) -> np.ndarray:
    """Vectorised numpy twin of :func:`sense_all`, kept as a cross-check."""
    left = np.stack([-np.sin(world.heading), np.cos(world.heading)], axis=-1)
    ground_l = world.in_nest(world.pos + GROUND_OFFSET * left)
    ground_r = world.in_nest(world.pos - GROUND_OFFSET * left)
    return np.column_stack([
        _ir(world), _camera(world),
        ground_l.astype(float), ground_r.astype(float), world.energy,
    ])


def sense(world: World, robot_index: int) -> np.ndarray:
    return sense_all(world)[robot_index]


def _resolve_collisions(old, new):
    """Undo the translation of moving robots that would overlap another disc."""
    moved = np.any(new != old, axis=1)
    pos = new.copy()
    n = len(pos)
    limit = (2 * ROBOT_RADIUS) ** 2
    while True:
        diff = pos[:, None, :] - pos[None, :, :]
        clash = np.sum(diff * diff, axis=-1) < limit
        clash[np.arange(n), np.arange(n)] = False
        revert = clash.any(axis=1) & moved
        if not revert.any():
            return pos
        pos[revert] = old[revert]
        moved &= ~revert


def step_world(world: World, controls, dt=DT) -> World:
    """Advance the world by one control step; ``controls`` is ``(n, 4)`` in [0, 1].

    Columns: left wheel, right wheel, front red LEDs, rear blue LEDs.
    """
    u = np.asarray(controls, dtype=float)
    if u.shape != (world.n_robots, 4):
        raise ValueError(f"controls must have shape ({world.n_robots}, 4)")
    w = world.copy()
    w.led_red = u[:, 2] > 0.5
    w.led_blue = u[:, 3] > 0.5
    v_left = (2 * u[:, 0] - 1) * V_MAX
    v_right = (2 * u[:, 1] - 1) * V_MAX
    v = (v_left + v_right) / 2
    omega = (v_right - v_left) / AXLE
    mid = w.heading + omega * dt / 2
    target = w.pos + (v * dt)[:, None] * np.column_stack([np.cos(mid), np.sin(mid)])
    target = np.clip(target, ROBOT_RADIUS, ARENA - ROBOT_RADIUS)
    w.pos = _resolve_collisions(world.pos, target)
    w.heading = _wrap(w.heading + omega * dt)

    inside = w.in_nest()
    w.energy_ticks = np.where(inside, ENERGY_TICKS, np.maximum(w.energy_ticks - 1, 0))

    cell = _cell_of(w.pos)
    entering = (cell != world.cell) & w.food[cell] & (w.energy_ticks > 0)
    for c in np.unique(cell[entering]):
        claimants = np.flatnonzero(entering & (cell == c))
        centre = (np.array(divmod(int(c), N_CELLS)) + 0.5) * CELL
        d2 = np.sum((w.pos[claimants] - centre) ** 2, axis=1)
        order = np.lexsort((w.pos[claimants, 1], w.pos[claimants, 0], d2))
        winner = claimants[order[0]]
        w.food[c] = False
        w.carried[winner] += 1
    w.cell = cell

    w.released += int(w.carried[inside].sum())
    w.carried[inside] = 0
    w.steps += 1
    return w


class _Swarm:
    """Ten copies of one controller, each with its own recurrent state."""

    def __init__(self, topology, genome, n):
        split_genome(topology, genome)
        self.topology = topology
        self.genome = np.ascontiguousarray(genome, dtype=float)
        self.states = np.zeros((n, topology.n_internal))
        self._scratch = np.empty(topology.n_internal)

    def activate(self, inputs):
        t = self.topology
        out = np.empty((len(inputs), t.n_motors))
        for i, x in enumerate(inputs):
            network_step(self.genome, t.n_sensors, t.n_internal, t.n_motors,
                         np.ascontiguousarray(x), self.states[i], self._scratch, out[i])
        return out


class Foraging(Environment):
    """Swarm foraging; fitness is the number of food items released in the nest."""

    name = "swarm"

    def __init__(self, n_steps=N_STEPS, n_internal=10):
        self.n_steps = int(n_steps)
        self.topology = NetworkTopology(N_SENSORS, n_internal, 4)
        self.condition_ranges = condition_ranges()

    def controller(self, genome):
        return np.asarray(genome, dtype=float)

    def run_episode(self, genome, conditions, replay=None) -> float:
        """Simulate one episode; ``replay`` (a list) collects per-step robot rows."""
        world = make_world(conditions)
        team = _Swarm(self.topology, genome, world.n_robots)
        for _ in range(self.n_steps):
            controls = team.activate(sense_all(world))
            world = step_world(world, controls)
            if replay is not None:
                replay.extend(_replay_rows(world))
        return float(world.released)


def _replay_rows(world):
    for i in range(world.n_robots):
        yield (world.steps, i, world.pos[i, 0], world.pos[i, 1], world.heading[i],
               int(world.led_red[i]), int(world.led_blue[i]), world.energy[i],
               int(world.carried[i]), world.released)


def write_replay_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "robot", "x", "y", "heading", "red", "blue", "energy",
                    "carried", "released"])
        w.writerows(rows)
