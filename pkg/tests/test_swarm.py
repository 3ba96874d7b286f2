import math

import numpy as np
import pytest

from robustevo.envs import swarm as sw
from robustevo.envs.swarm import (ARENA, AXLE, CELL, N_CELLS, ROBOT_RADIUS, V_MAX, Foraging,
                                  make_world, sense_all, sense_all_reference, separate,
                                  step_world, write_replay_csv)

STILL = 0.5


def _world(poses, nest=(1.0, 1.0)):
    return make_world(nest=nest, poses=poses)


def _controls(n, left=STILL, right=STILL, red=0.0, blue=0.0):
    return np.tile([left, right, red, blue], (n, 1))


def test_lone_robot_senses_nothing():
    out = sense_all(_world([[2.5, 2.5, 0.3]]))[0]
    assert out.shape == (15,)
    assert out[:14].tolist() == [0.0] * 14
    assert out[14] == 1.0


def test_robot_in_nest_reads_gray_floor():
    out = sense_all(_world([[1.0, 1.0, 0.7]]))[0]
    assert out[12:14].tolist() == [1.0, 1.0]


def test_robot_on_nest_rim_sees_gray_on_one_side():
    # heading +x, nest to the left of the robot: the left ground point is inside
    out = sense_all(_world([[1.0, 1.0 - 0.45, 0.0]]))[0]
    assert out[12:14].tolist() == [1.0, 0.0]


def test_facing_robots_trigger_front_infrared_only():
    gap = 0.05
    x0 = 2.0
    w = _world([[x0, 2.0, 0.0], [x0 + 2 * ROBOT_RADIUS + gap, 2.0, math.pi]])
    out = sense_all(w)
    for i in range(2):
        assert out[i, 0] > 0
        assert out[i, 4] == 0  # rear group
        assert out[i, 2] == out[i, 6] == 0
    # ray at +/-5 degrees meets the other disc almost head on
    assert out[0, 0] == pytest.approx(out[1, 0], abs=1e-12)
    assert out[0, 0] < 1 - gap / sw.IR_RANGE


def test_wall_proximity_reaches_one_at_contact():
    w = _world([[ROBOT_RADIUS, 2.5, math.pi]])
    out = sense_all(w)[0]
    # the rays straddle the wall normal, so even at contact they travel a few mm
    assert 0.95 < out[0] < 1.0
    assert out[4] == 0.0


def test_camera_sees_red_front_of_oncoming_robot():
    w = _world([[2.0, 2.0, 0.0], [3.0, 2.0, math.pi]])
    w.led_red[:] = True
    out = sense_all(w)[0]
    assert out[8] > 0 and out[8] == pytest.approx(out[10], abs=1e-12)
    assert out[9] == out[11] == 0.0
    w.led_red[:] = False
    w.led_blue[:] = True  # rear lights point away from the observer
    assert np.all(sense_all(w)[0, 8:12] == 0)


def test_camera_ignores_robots_behind():
    w = _world([[2.0, 2.0, math.pi], [3.0, 2.0, math.pi]])
    w.led_red[:] = True
    assert np.all(sense_all(w)[0, 8:12] == 0)


def test_compiled_sensing_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = make_world(rng.uniform(sw.condition_ranges()[:, 0], sw.condition_ranges()[:, 1]))
        for _ in range(rng.integers(0, 30)):
            w = step_world(w, rng.random((10, 4)))
        w.led_red = rng.random(10) < 0.5
        w.led_blue = rng.random(10) < 0.5
        np.testing.assert_allclose(sense_all(w), sense_all_reference(w), rtol=0, atol=1e-12)


def test_sense_single_robot_row():
    w = make_world(np.random.default_rng(1).uniform(*sw.condition_ranges().T))
    assert np.array_equal(sw.sense(w, 3), sense_all(w)[3])


def test_standing_still_drains_energy():
    w = _world([[3.0, 3.0, 0.0]])
    for step in range(100):
        w = step_world(w, _controls(1))
        assert w.energy[0] == pytest.approx(1 - 0.01 * (step + 1))
    assert w.energy[0] == 0.0 and w.pos.tolist() == [[3.0, 3.0]]
    w = step_world(w, _controls(1))
    assert w.energy[0] == 0.0


def test_nest_recharges():
    w = _world([[1.0, 1.0, 0.0]])
    w.energy_ticks[:] = 3
    w = step_world(w, _controls(1))
    assert w.energy[0] == 1.0


def test_leds_follow_motor_threshold():
    w = _world([[3.0, 3.0, 0.0], [4.0, 4.0, 0.0]])
    w = step_world(w, [[0.5, 0.5, 0.51, 0.5], [0.5, 0.5, 0.2, 0.9]])
    assert w.led_red.tolist() == [True, False] and w.led_blue.tolist() == [False, True]


def test_kinematics_forward_and_spin():
    w = step_world(_world([[3.0, 3.0, 0.0]]), _controls(1, 1.0, 1.0))
    assert w.pos[0].tolist() == pytest.approx([3.0 + V_MAX * 0.1, 3.0])
    w = step_world(_world([[3.0, 3.0, 0.0]]), _controls(1, 0.0, 1.0))
    assert w.pos[0].tolist() == [3.0, 3.0]
    assert w.heading[0] == pytest.approx(2 * V_MAX / AXLE * 0.1)


def test_straight_drive_collects_one_item_per_new_cell():
    y = 2 * CELL + CELL / 2
    w = _world([[0.3, y, 0.0]], nest=(4.0, 4.0))
    visited = {int(w.cell[0])}
    for _ in range(60):
        w = step_world(w, _controls(1, 1.0, 1.0))
        visited.add(int(w.cell[0]))
    assert len(visited) > 5
    assert w.carried[0] == len(visited) - 1
    row = w.food.reshape(N_CELLS, N_CELLS)
    assert w.food_total() == N_CELLS * N_CELLS
    assert int((~row).sum()) == len(visited) - 1


def test_no_pickup_without_energy():
    w = _world([[0.3, 0.6, 0.0]], nest=(4.0, 4.0))
    w.energy_ticks[:] = 0
    for _ in range(30):
        w = step_world(w, _controls(1, 1.0, 1.0))
    assert w.carried[0] == 0 and w.food.all()


def test_carrier_releases_in_nest():
    nest = np.array([2.5, 2.5])
    w = _world([[2.5 - 0.45, 2.5, 0.0]], nest=nest)
    w.carried[0] = 5
    w.energy_ticks[:] = 10
    w.food[:] = False
    for _ in range(5):
        w = step_world(w, _controls(1, 1.0, 1.0))
    assert w.released == 5 and w.carried[0] == 0 and w.energy[0] == 1.0


def test_walls_and_robots_stop_motion():
    w = _world([[ROBOT_RADIUS + 0.01, 2.0, math.pi], [3.0, 3.0, 0.0],
                [3.0 + 2 * ROBOT_RADIUS + 0.01, 3.0, math.pi]])
    for _ in range(20):
        w = step_world(w, _controls(3, 1.0, 1.0))
    assert w.pos[0, 0] == pytest.approx(ROBOT_RADIUS)
    gap = np.linalg.norm(w.pos[1] - w.pos[2])
    assert gap >= 2 * ROBOT_RADIUS


def test_random_driving_stays_contained():
    rng = np.random.default_rng(2)
    w = make_world(rng.uniform(*sw.condition_ranges().T))
    for _ in range(400):
        w = step_world(w, rng.random((10, 4)))
        assert np.all(w.pos >= ROBOT_RADIUS) and np.all(w.pos <= ARENA - ROBOT_RADIUS)
        d = np.linalg.norm(w.pos[:, None] - w.pos[None], axis=-1)
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 2 * ROBOT_RADIUS
        assert np.all((w.energy >= 0) & (w.energy <= 1))
        assert np.all(w.energy[w.in_nest()] == 1.0)
        assert w.food_total() == 400


def test_separate_resolves_overlap_and_is_order_free():
    rng = np.random.default_rng(3)
    pts = 2.5 + rng.uniform(-0.5, 0.5, (10, 2))
    a = separate(pts, np.array([2.5, 2.5]))
    d = np.linalg.norm(a[:, None] - a[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 2 * ROBOT_RADIUS
    perm = rng.permutation(10)
    b = separate(pts[perm], np.array([2.5, 2.5]))
    np.testing.assert_allclose(b, a[perm], rtol=0, atol=1e-12)


def test_coincident_start_points_are_separated():
    w = make_world(np.r_[2.5, 2.5, np.zeros(30)])
    d = np.linalg.norm(w.pos[:, None] - w.pos[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 2 * ROBOT_RADIUS


def test_condition_layout():
    r = sw.condition_ranges()
    assert r.shape == (32, 2)
    assert r[0].tolist() == [1.0, 4.0]
    assert r[4].tolist() == [-math.pi, math.pi]
    with pytest.raises(ValueError):
        make_world(np.zeros(31))


def test_zero_genome_scores_nothing():
    env = Foraging(n_steps=60)
    row = np.random.default_rng(4).uniform(*env.condition_ranges.T)
    assert env.run_episode(np.zeros(env.topology.n_params), row) == 0.0
    assert env.evaluate_batch(np.zeros((1, env.topology.n_params)), row[None])[0, 0] == 0.0


def test_scripted_out_and_back_policy_delivers_food():
    env = Foraging()
    row = np.zeros(32)
    row[:2] = 2.5
    rng = np.random.default_rng(5)
    row[2:] = rng.uniform(*env.condition_ranges[2:].T).T
    w = make_world(row)
    turn_steps = int(round(math.pi / (2 * V_MAX / AXLE) / 0.1))
    for _ in range(3):
        for phase, steps in (((1, 1), 35), ((0, 1), turn_steps), ((1, 1), 35), ((0, 1), turn_steps)):
            for _ in range(steps):
                w = step_world(w, _controls(10, *phase))
    assert w.released > 0
    assert w.food_total() == 400


def test_permuting_robots_permutes_the_episode():
    env = Foraging(n_steps=40)
    rng = np.random.default_rng(6)
    row = rng.uniform(*env.condition_ranges.T)
    genome = rng.normal(0, 1.5, env.topology.n_params)
    perm = rng.permutation(10)
    prow = row.copy()
    prow[2:] = row[2:].reshape(10, 3)[perm].ravel()
    ra, rb = [], []
    fa = env.run_episode(genome, row, replay=ra)
    fb = env.run_episode(genome, prow, replay=rb)
    assert fa == fb
    a = np.array(ra, dtype=float).reshape(40, 10, -1)
    b = np.array(rb, dtype=float).reshape(40, 10, -1)
    np.testing.assert_allclose(b[:, :, 2:], a[:, perm, 2:], rtol=0, atol=1e-9)


def test_episode_is_deterministic_and_bounded():
    env = Foraging(n_steps=50)
    rng = np.random.default_rng(7)
    rows = rng.uniform(*env.condition_ranges.T, size=(2, 32))
    genomes = rng.normal(0, 2, (2, env.topology.n_params))
    a = env.evaluate_batch(genomes, rows)
    assert np.array_equal(a, env.evaluate_batch(genomes, rows))
    assert np.all((a >= 0) & (a <= 400))


def test_replay_csv(tmp_path):
    env = Foraging(n_steps=3)
    rows = []
    env.run_episode(np.zeros(env.topology.n_params), np.r_[2.5, 2.5, np.zeros(30)],
                    replay=rows)
    path = tmp_path / "replay.csv"
    write_replay_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,robot,x,y,heading,red,blue,energy,carried,released"
    assert len(lines) == 1 + 3 * 10
