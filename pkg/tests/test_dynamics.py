import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from redcho import oracles
from redcho.algebra import ProtocolMatrices, ProtocolParams, example1_params
from redcho.dynamics import (
    NetworkState,
    coupling_blocks,
    dilation,
    error_rhs,
    h_field,
    homogeneity_weights,
    output_map,
    q_field,
    redcho_rhs,
    signum_power,
    z_transform,
)
from redcho.graph import from_edge_list, ring
from redcho.signals import example1_bank, random_cosine_bank
from redcho.verify import random_connected_graph, random_params

seeds = st.integers(0, 2**31 - 1)


def test_signum_power_examples():
    assert signum_power(4.0, 0.5) == 2.0
    assert signum_power(-4.0, 0.5) == -2.0
    assert signum_power(0.0, 0.0) == 0.0
    assert signum_power(-3.0, 0.0) == -1.0
    assert signum_power(0.0, 0.7) == 0.0
    with pytest.raises(ValueError):
        signum_power(1.0, -0.1)


def test_state_round_trip():
    X = np.arange(12.0).reshape(3, 4)
    s = NetworkState(X, 1.0)
    assert np.array_equal(NetworkState.from_stacked(s.stacked, 2).X, X)


def test_output_map_trivial_cases():
    bank = example1_bank()
    pm = ProtocolMatrices.from_params(example1_params())
    f = output_map(np.zeros((3, 8)), bank, pm, 1.7)
    assert np.array_equal(f.Y, bank.stacked(1.7, 3))
    pm0 = ProtocolMatrices.from_params(ProtocolParams(0, (2.0,), (1.0,)))
    x = np.linspace(-1, 1, 8)[None, :]
    assert np.array_equal(output_map(x, bank, pm0, 0.3).Y[0], bank.derivatives(0, 0.3) - x[0])
    with pytest.raises(ValueError):
        output_map(np.zeros((3, 7)), bank, pm, 0.0)


@settings(max_examples=30)
@given(seeds)
def test_output_frame_invariants(seed):
    rng = np.random.default_rng(seed)
    bank = random_cosine_bank(9, seed)
    pm = ProtocolMatrices.from_params(random_params(rng, 2))
    f = output_map(rng.normal(size=(3, 9)), bank, pm, rng.uniform(0, 10))
    assert np.max(np.abs(f.ybar[:, None] + f.Ytilde - f.Y)) <= 1e-12
    assert np.max(np.abs(f.Ytilde.sum(axis=1))) <= 1e-10


@settings(max_examples=30)
@given(seeds)
def test_output_and_rhs_match_kronecker_form(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    net = random_connected_graph(rng, n)
    p = example1_params()
    pm = ProtocolMatrices.from_params(p)
    bank = random_cosine_bank(n, seed)
    X = rng.normal(size=(3, n))
    t = rng.uniform(0, 10)
    f = output_map(X, bank, pm, t)
    y_ref = oracles.kron_output(X.reshape(-1), bank.stacked(t, 3).reshape(-1), np.array(pm.G))
    assert np.max(np.abs(f.Y.reshape(-1) - y_ref)) <= 1e-12
    rhs = redcho_rhs(X, f.Y[0], p, net).reshape(-1)
    ref = oracles.kron_rhs(X.reshape(-1), f.Y[0], 2, p.gamma, p.k, p.theta, net.adjacency)
    assert np.max(np.abs(rhs - ref)) <= 1e-12


def test_rhs_zero_at_consensus():
    p = example1_params()
    assert np.array_equal(redcho_rhs(np.zeros((3, 8)), np.full(8, 0.4), p, ring(8)), np.zeros((3, 8)))


def test_rhs_single_edge_by_hand():
    net = from_edge_list(2, [(0, 1)])
    p = ProtocolParams(0, (1.0,), (1.0,), 1.0)
    assert np.array_equal(redcho_rhs(np.zeros((1, 2)), np.array([1.0, 0.0]), p, net), [[1.0, -1.0]])


@given(seeds, st.sampled_from([0.0, 1 / 3, 0.5, 2 / 3, 1.0]))
def test_adjacency_and_incidence_forms_agree(seed, alpha):
    rng = np.random.default_rng(seed)
    net = random_connected_graph(rng, int(rng.integers(2, 12)))
    y = rng.normal(size=net.n)
    D = np.array(net.incidence)
    a = oracles.adjacency_coupling(net.adjacency, y, alpha)
    b = D @ signum_power(D.T @ y, alpha)
    assert np.max(np.abs(a - b)) <= 1e-12


@given(seeds)
def test_mean_dynamics_of_rhs(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 10)), int(rng.integers(0, 4))
    net = random_connected_graph(rng, n)
    p = random_params(rng, m)
    X = rng.normal(size=(m + 1, n))
    s = X.sum(axis=1)
    got = redcho_rhs(X, rng.normal(size=n), p, net).sum(axis=1)
    ref = -np.asarray(p.gamma) * s
    ref[:-1] += s[1:]
    assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.abs(X).sum())


def test_rhs_orientation_invariance():
    rng = np.random.default_rng(5)
    net = random_connected_graph(rng, 7)
    edges = list(net.edges)
    p = example1_params()
    X, y0 = rng.normal(size=(3, 7)), rng.normal(size=7)
    a = redcho_rhs(X, y0, p, net)
    # the same graph built with a reversed labelling flips every orientation
    perm = np.arange(7)[::-1]
    rev = from_edge_list(7, sorted((min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in edges))
    b = redcho_rhs(X[:, perm], y0[perm], p, rev)[:, np.argsort(perm)]
    assert np.max(np.abs(a - b)) <= 1e-12


@settings(max_examples=30)
@given(seeds)
def test_edcho_limit_matches_direct_error_dynamics(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 12)), int(rng.integers(0, 4))
    net = random_connected_graph(rng, n)
    p = random_params(rng, m, positive=False)
    pm = ProtocolMatrices.from_params(p)
    bank = random_cosine_bank(n, seed)
    X, t = rng.normal(size=(m + 1, n)), rng.uniform(0, 10)
    got = error_rhs(X, bank, pm, p, net, t)
    Yt = output_map(X, bank, pm, t).Ytilde
    Un = bank.derivatives(m + 1, t)
    ref = oracles.edcho_error_rhs(Yt, Un - Un.mean(), p.k, np.array(net.incidence))
    assert np.max(np.abs(got - ref)) <= 1e-12


def test_error_rhs_matches_finite_difference_of_outputs():
    # continuous-time check of d/dt P Y along the flow, smooth case (m = 0 sign term excluded)
    rng = np.random.default_rng(3)
    net = ring(6)
    p = ProtocolParams(1, (1.0, 2.0), (1.0, 1.0), 1.0)
    pm = ProtocolMatrices.from_params(p)
    bank = random_cosine_bank(6, 3)
    X, t, h = rng.normal(size=(2, 6)), 1.2, 1e-6

    def Yt(X, t):
        return output_map(X, bank, pm, t).Ytilde

    dX = redcho_rhs(X, output_map(X, bank, pm, t).Y[0], p, net)
    fd = (Yt(X + h * dX, t + h) - Yt(X - h * dX, t - h)) / (2 * h)
    got = error_rhs(X, bank, pm, p, net, t)
    assert np.max(np.abs(got[0] - fd[0])) <= 1e-6


def test_z_transform():
    pm = ProtocolMatrices.from_params(example1_params(theta=2.0))
    assert np.array_equal(z_transform(np.zeros((3, 5)), pm), np.zeros((3, 5)))
    rng = np.random.default_rng(0)
    Yt = rng.normal(size=(3, 5))
    Yt -= Yt.mean(axis=1, keepdims=True)
    Z = z_transform(Yt, pm)
    assert np.max(np.abs(Z[0] - Yt[0])) <= 1e-12
    pe = ProtocolMatrices.from_params(ProtocolParams(2, (0, 0, 0), (1, 1, 1)))
    assert np.max(np.abs(z_transform(Yt, pe) - np.linalg.solve(np.array(pe.G), Yt))) <= 1e-12
    with pytest.raises(ValueError):
        z_transform(np.zeros((2, 5)), pm)


def test_fields_at_origin_and_linearity():
    p, net = example1_params(), ring(5)
    Z0 = np.zeros((3, 5))
    assert np.array_equal(h_field(Z0, 0.0, p, net), Z0)
    assert np.array_equal(q_field(Z0, p), Z0)
    Z = np.random.default_rng(1).normal(size=(3, 5))
    np.testing.assert_allclose(q_field(-3.5 * Z, p), -3.5 * q_field(Z, p), rtol=1e-15)


def test_h_field_selection_bound():
    p, net = example1_params(), ring(4)
    Z = np.random.default_rng(2).normal(size=(3, 4))
    for w in (2.0, -2.0):
        H = h_field(Z, w, p, net, L=2.0)
        assert np.allclose(H[-1] - h_field(Z, 0.0, p, net)[-1], w)
    with pytest.raises(ValueError):
        h_field(Z, 2.5, p, net, L=2.0)


@settings(max_examples=50)
@given(seeds, st.floats(0.5, 2.0))
def test_homogeneity_degrees(seed, lam):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, 4))
    net = random_connected_graph(rng, int(rng.integers(2, 10)))
    p = random_params(rng, m)
    Z = rng.normal(size=(m + 1, net.n))
    r = homogeneity_weights(m)
    lhs = h_field(dilation(Z, lam, r), 0.0, p, net)
    rhs = dilation(h_field(Z, 0.0, p, net), lam, r) / lam
    assert np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))) <= 1e-9
    lq, rq = q_field(dilation(Z, lam, r), p), dilation(q_field(Z, p), lam, r)
    assert np.max(np.abs(lq - rq)) / max(1.0, np.max(np.abs(rq))) <= 1e-9


def test_dilation_rules():
    Z = np.random.default_rng(4).normal(size=(2, 3))
    assert np.array_equal(dilation(Z, 1.0), Z)
    D2 = dilation(Z, 2.0, [2, 1])
    assert np.array_equal(D2[0], 4 * Z[0]) and np.array_equal(D2[1], 2 * Z[1])
    np.testing.assert_allclose(dilation(dilation(Z, 1.3), 0.7), dilation(Z, 1.3 * 0.7), atol=1e-12)
    assert np.array_equal(homogeneity_weights(2), [3, 2, 1])
    with pytest.raises(ValueError):
        dilation(Z, 0.0)


def test_coupling_blocks_use_region_gain():
    p = example1_params(theta=2.0)
    y0 = np.array([1.0, -0.5, 0.25, 0.0])
    net = ring(4)
    np.testing.assert_allclose(coupling_blocks(y0, p, net), coupling_blocks(y0, p, net, theta=2.0))
    unit = coupling_blocks(y0, p, net, theta=1.0)
    np.testing.assert_allclose(coupling_blocks(y0, p, net), unit * np.array([2.0, 4.0, 8.0])[:, None])
