import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphontest.core import GridGraphon, SplineGraphon, graphon_eval, graphon_mean
from graphontest.simulate import (
    SimConfig,
    child_rngs,
    sample_graph,
    sample_positions,
    shrink_alternative,
    simulate,
    three_group_graphon,
)


def test_positions_deterministic():
    a = sample_positions(50, np.random.default_rng(9)).u
    b = sample_positions(50, np.random.default_rng(9)).u
    assert np.array_equal(a, b)


def test_positions_open_interval_and_mean():
    u = sample_positions(100_000, np.random.default_rng(3)).u
    assert ((u > 0) & (u < 1)).all()
    # CLT bound: 3 sigma of a uniform mean
    assert abs(u.mean() - 0.5) < 3 * np.sqrt(1 / 12 / 100_000)


def test_positions_rejects_small_n():
    with pytest.raises(ValueError):
        sample_positions(1, np.random.default_rng(0))


def test_complete_and_empty_graphs():
    pos = sample_positions(20, np.random.default_rng(0))
    full = sample_graph(SplineGraphon(2, np.ones(4)), pos, np.random.default_rng(1))
    empty = sample_graph(SplineGraphon(2, np.zeros(4)), pos, np.random.default_rng(1))
    assert full.n_edges == 20 * 19 // 2
    assert empty.n_edges == 0


def test_constant_density_binomial_bound():
    g = SplineGraphon(2, np.full(4, 0.3))
    pos = sample_positions(200, np.random.default_rng(5))
    net = sample_graph(g, pos, np.random.default_rng(6))
    n_dyads = 200 * 199 / 2
    se = np.sqrt(0.3 * 0.7 / n_dyads)
    assert abs(net.density() - 0.3) < 3 * se


def test_graph_invariants_random_configs():
    rng = np.random.default_rng(11)
    truth = three_group_graphon()
    for _ in range(100):
        n = int(rng.integers(2, 40))
        pos = sample_positions(n, rng)
        net = sample_graph(truth, pos, rng)
        assert net.adj.shape == (n, n)
        assert np.array_equal(net.adj, net.adj.T)
        assert not np.diagonal(net.adj).any()


def test_dyad_frequencies_match_graphon():
    """Empirical edge frequencies over replicate draws at fixed positions
    stay within 3 binomial standard errors of the evaluated graphon."""
    truth = three_group_graphon()
    pos = sample_positions(5, np.random.default_rng(21))
    reps = 10_000
    rng = np.random.default_rng(22)
    counts = np.zeros((5, 5))
    for _ in range(reps):
        counts += sample_graph(truth, pos, rng).adj
    iu, ju = np.triu_indices(5, k=1)
    p_hat = counts[iu, ju] / reps
    p_true = graphon_eval(truth, pos.u[iu], pos.u[ju])
    se = np.sqrt(p_true * (1 - p_true) / reps)
    assert (np.abs(p_hat - p_true) <= 3 * se).all()


def test_simulate_uses_split_streams():
    cfg = SimConfig(n=30, seed=77, graphon=three_group_graphon())
    net1, pos1 = simulate(cfg)
    net2, pos2 = simulate(cfg)
    assert np.array_equal(net1.adj, net2.adj)
    assert np.array_equal(pos1.u, pos2.u)
    rngs = child_rngs(77, 2)
    assert np.array_equal(pos1.u, np.clip(rngs[0].random(30), 1e-12, 1 - 1e-12))


def test_sim_config_validates():
    with pytest.raises(ValueError):
        SimConfig(n=1, seed=0, graphon=three_group_graphon())


class TestShrinkAlternative:
    def test_identity_at_zero(self):
        g = three_group_graphon()
        assert np.array_equal(shrink_alternative(g, 0.0).values, g.values)

    def test_constant_at_one(self):
        g = three_group_graphon()
        out = shrink_alternative(g, 1.0)
        assert np.allclose(out.values, graphon_mean(g))

    def test_halfway_value(self):
        # direct formula: value 0.8 with mean 0.2 shrinks to 0.5 at gamma=0.5
        g = GridGraphon(np.array([[0.8, 0.0], [0.0, 0.0]]), mode="constant")
        assert abs(graphon_mean(g) - 0.2) < 1e-12
        out = shrink_alternative(g, 0.5)
        assert abs(graphon_eval(out, 0.1, 0.1) - 0.5) < 1e-12

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            shrink_alternative(three_group_graphon(), 1.2)

    def test_spline_kind_preserved(self):
        g = SplineGraphon(3, np.full(9, 0.4))
        out = shrink_alternative(g, 0.3)
        assert isinstance(out, SplineGraphon)

    @given(st.floats(0, 1, allow_nan=False))
    @settings(max_examples=50, deadline=None)
    def test_mean_preserved(self, gamma):
        g = three_group_graphon()
        assert abs(graphon_mean(shrink_alternative(g, gamma)) - graphon_mean(g)) < 1e-12


def test_three_group_surface_shape():
    g = three_group_graphon()
    assert g.m == 3 and g.mode == "bilinear"
    assert 0.25 < graphon_mean(g) < 0.35
