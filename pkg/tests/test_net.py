import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustevo.net import (NetworkTopology, RecurrentNetwork, load_genome, network_step,
                           param_count, save_genome, split_genome)


@pytest.mark.parametrize("dims,expected", [((3, 10, 1), 151), ((12, 10, 2), 252),
                                           ((16, 10, 4), 314), ((15, 10, 4), 304)])
def test_param_count(dims, expected):
    assert param_count(NetworkTopology(*dims)) == expected


@pytest.mark.parametrize("dims", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (1.5, 1, 1)])
def test_topology_rejects_bad_counts(dims):
    with pytest.raises(ValueError):
        NetworkTopology(*dims)


def test_zero_weights_give_half():
    topo = NetworkTopology(3, 10, 1)
    net = RecurrentNetwork(topo, np.zeros(topo.n_params))
    for x in ([0, 0, 0], [5, -3, 1], [1e3, 0, 0]):
        assert net.activate(x).tolist() == [0.5]
        assert net.state.tolist() == [0.0] * 10


def _scalar_net(recurrent):
    # genome order: [w_sensor, w_bias] | [w_rec] | [w_out] | [b_out]
    return RecurrentNetwork(NetworkTopology(1, 1, 1), [1.0, 0.0, recurrent, 1.0, 0.0])


def test_scalar_hand_computation():
    net = _scalar_net(0.0)
    out = net.activate([1.0])
    assert net.state[0] == pytest.approx(0.7615941559557649, abs=1e-15)
    assert out[0] == pytest.approx(1 / (1 + math.exp(-math.tanh(1.0))), abs=1e-15)
    assert out[0] == pytest.approx(0.6817, abs=1e-4)
    net.activate([0.0])
    assert net.state[0] == 0.0


def test_recurrence_persists():
    net = _scalar_net(1.0)
    net.activate([1.0])
    net.activate([0.0])
    assert net.state[0] == pytest.approx(math.tanh(math.tanh(1.0)), abs=1e-15)
    assert net.state[0] == pytest.approx(0.6421, abs=1e-4)


def test_reset_is_idempotent_and_restores_zero_state():
    topo = NetworkTopology(2, 3, 2)
    g = np.random.default_rng(0).normal(size=topo.n_params)
    net = RecurrentNetwork(topo, g)
    first = [net.activate([0.3, -0.2]) for _ in range(3)]
    net.reset()
    net.reset()
    assert np.all(net.state == 0)
    again = [net.activate([0.3, -0.2]) for _ in range(3)]
    assert np.array_equal(np.array(first), np.array(again))


def test_activate_rejects_wrong_length():
    net = RecurrentNetwork(NetworkTopology(3, 2, 1), np.zeros(param_count(NetworkTopology(3, 2, 1))))
    with pytest.raises(ValueError):
        net.activate([1.0, 2.0])


def test_genome_length_checked():
    with pytest.raises(ValueError):
        RecurrentNetwork(NetworkTopology(3, 10, 1), np.zeros(150))


def test_split_genome_layout():
    topo = NetworkTopology(2, 3, 2)
    g = np.arange(topo.n_params, dtype=float)
    w_in, w_rec, w_out, b_out = split_genome(topo, g)
    assert w_in.shape == (3, 3) and w_in[0].tolist() == [0, 1, 2]
    assert w_rec[0, 0] == 9
    assert w_out.shape == (2, 3) and w_out[0, 0] == 18
    assert b_out.tolist() == [24, 25]


def _numpy_step(topo, genome, x, state):
    w_in, w_rec, w_out, b_out = split_genome(topo, genome)
    new = np.tanh(w_in[:, :-1] @ x + w_in[:, -1] + w_rec @ state)
    return new, 1.0 / (1.0 + np.exp(-(w_out @ new + b_out)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31))
def test_network_matches_matrix_form(s, h, m, seed):
    topo = NetworkTopology(s, h, m)
    rng = np.random.default_rng(seed)
    g = rng.normal(0, 2, topo.n_params)
    net = RecurrentNetwork(topo, g)
    state, scratch, out = np.zeros(h), np.empty(h), np.empty(m)
    ref_state = np.zeros(h)
    for _ in range(5):
        x = rng.normal(size=s)
        got = net.activate(x)
        network_step(g, s, h, m, x, state, scratch, out)
        ref_state, ref = _numpy_step(topo, g, x, ref_state)
        assert np.array_equal(got, out) and np.array_equal(state, net.state)
        np.testing.assert_allclose(out, ref, rtol=0, atol=1e-12)
        np.testing.assert_allclose(state, ref_state, rtol=0, atol=1e-12)
        assert np.all((out >= 0) & (out <= 1))
        assert np.all(np.abs(net.state) <= 1)


def test_genome_file_round_trip(tmp_path):
    topo = NetworkTopology(3, 4, 2)
    g = np.random.default_rng(1).normal(size=topo.n_params)
    path = tmp_path / "g.txt"
    save_genome(path, topo, g)
    lines = path.read_text().splitlines()
    assert lines[0] == "3 4 2" and len(lines) == 1 + topo.n_params
    topo2, g2 = load_genome(path)
    assert topo2 == topo and np.array_equal(g, g2)


def test_load_genome_rejects_mismatch(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("3 10 1\n0.0\n1.0\n")
    with pytest.raises(ValueError):
        load_genome(path)
