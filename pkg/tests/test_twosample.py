import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph_from_edges
from graphontest.core import NodePositions
from graphontest.errors import DegenerateTestError
from graphontest.estep import rank_adjust
from graphontest.simulate import sample_graph, sample_positions, three_group_graphon
from graphontest.twosample import (
    RectanglePartition,
    cell_moments,
    choose_k,
    rectangle_counts,
    run_test,
    simulate_null,
)
from graphontest.twosample import test_statistic as statistic_of


class TestChooseK:
    def test_paper_regime(self):
        # floor(201/20) = 10 holds while floor(201/21) = 9 fails
        assert choose_k(200, 300, 10) == 20

    def test_small_networks_fall_back(self):
        assert choose_k(5, 8, 10) == 1

    def test_brain_regime(self):
        assert choose_k(116, 116, 10) == 11

    def test_validation(self):
        with pytest.raises(ValueError):
            choose_k(1, 10)
        with pytest.raises(ValueError):
            choose_k(10, 10, 0)

    def test_guaranteed_occupancy_on_grid(self):
        n1, n2, q = 200, 300, 10
        k = choose_k(n1, n2, q)
        part = RectanglePartition.equidistant(k)
        for n in (n1, n2):
            grid = np.arange(1, n + 1) / (n + 1)
            occupancy = np.bincount(part.interval_of(grid), minlength=k)
            assert occupancy.min() >= q


class TestPartition:
    def test_default_boundaries(self):
        p = RectanglePartition.equidistant(4)
        assert np.allclose(p.boundaries, [0, 0.25, 0.5, 0.75, 1.0])
        assert p.K == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            RectanglePartition(np.array([0.0, 0.5, 0.4, 1.0]))
        with pytest.raises(ValueError):
            RectanglePartition(np.array([0.1, 1.0]))

    def test_top_boundary_closed(self):
        p = RectanglePartition.equidistant(5)
        assert p.interval_of(np.array([1.0]))[0] == 4
        assert p.interval_of(np.array([0.0]))[0] == 0


class TestRectangleCounts:
    def test_single_cell_totals(self):
        g = graph_from_edges(4, [(0, 1), (1, 2)])
        pos = NodePositions(np.array([0.2, 0.4, 0.6, 0.8]))
        counts = rectangle_counts((g, g), (pos, pos), RectanglePartition.equidistant(1))
        assert counts.d1[0] == 2 and counts.m1[0] == 6
        assert counts.d2[0] == 2 and counts.m2[0] == 6

    def test_hand_assignment_k2(self):
        # dyad (0,1) -> cell (1,1); (0,2),(0,3),(1,2),(1,3) -> (1,2); (2,3) -> (2,2)
        g = graph_from_edges(4, [(0, 1), (2, 3), (1, 3)])
        pos = NodePositions(np.array([0.2, 0.4, 0.6, 0.8]))
        counts = rectangle_counts((g, g), (pos, pos), RectanglePartition.equidistant(2))
        cells = {(int(k), int(l)): i for i, (k, l) in enumerate(zip(counts.cell_k, counts.cell_l))}
        assert counts.m1[cells[(0, 0)]] == 1 and counts.d1[cells[(0, 0)]] == 1
        assert counts.m1[cells[(0, 1)]] == 4 and counts.d1[cells[(0, 1)]] == 1
        assert counts.m1[cells[(1, 1)]] == 1 and counts.d1[cells[(1, 1)]] == 1

    def test_conservation(self):
        rng = np.random.default_rng(1)
        truth = three_group_graphon()
        for k in (1, 3, 7):
            pos_a = sample_positions(40, rng)
            pos_b = sample_positions(55, rng)
            net_a = sample_graph(truth, pos_a, rng)
            net_b = sample_graph(truth, pos_b, rng)
            counts = rectangle_counts((net_a, net_b), (pos_a, pos_b), RectanglePartition.equidistant(k))
            assert counts.d1.sum() == net_a.n_edges and counts.d2.sum() == net_b.n_edges
            assert counts.m1.sum() == 40 * 39 // 2 and counts.m2.sum() == 55 * 54 // 2

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(2)
        truth = three_group_graphon()
        pos = sample_positions(30, rng)
        net = sample_graph(truth, pos, rng)
        perm = rng.permutation(30)
        net_p = graph_from_edges(30, [(int(perm[i]), int(perm[j])) for i, j in zip(*np.nonzero(np.triu(net.adj, 1)))])
        pos_p = NodePositions(pos.u[np.argsort(perm)])
        part = RectanglePartition.equidistant(4)
        a = rectangle_counts((net, net), (pos, pos), part)
        b = rectangle_counts((net_p, net_p), (pos_p, pos_p), part)
        assert np.array_equal(a.d1, b.d1) and np.array_equal(a.m1, b.m1)


class TestStatistic:
    def test_single_cell_worked_example(self):
        from graphontest.twosample import RectangleCounts

        counts = RectangleCounts(
            K=1,
            cell_k=np.array([0]),
            cell_l=np.array([0]),
            d1=np.array([4]),
            d2=np.array([0]),
            m1=np.array([5]),
            m2=np.array([5]),
        )
        t, contrib, usable = statistic_of(counts)
        assert abs(t - 6.0) < 1e-12  # (4-2)^2 / (2/3)
        assert usable.sum() == 1

    def test_identical_graphs_zero(self):
        rng = np.random.default_rng(3)
        truth = three_group_graphon()
        pos = sample_positions(60, rng)
        net = sample_graph(truth, pos, rng)
        counts = rectangle_counts((net, net), (pos, pos), RectanglePartition.equidistant(3))
        t, contrib, usable = statistic_of(counts)
        assert t == 0.0

    def test_degenerate_raises(self):
        g = graph_from_edges(4, [])
        pos = NodePositions(np.array([0.2, 0.4, 0.6, 0.8]))
        counts = rectangle_counts((g, g), (pos, pos), RectanglePartition.equidistant(1))
        with pytest.raises(DegenerateTestError):
            statistic_of(counts)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_network_swap_invariance(self, seed):
        rng = np.random.default_rng(seed)
        truth = three_group_graphon()
        pos_a = sample_positions(25, rng)
        pos_b = sample_positions(35, rng)
        net_a = sample_graph(truth, pos_a, rng)
        net_b = sample_graph(truth, pos_b, rng)
        part = RectanglePartition.equidistant(2)
        ta = statistic_of(rectangle_counts((net_a, net_b), (pos_a, pos_b), part))[0]
        tb = statistic_of(rectangle_counts((net_b, net_a), (pos_b, pos_a), part))[0]
        assert abs(ta - tb) < 1e-9


class TestSimulateNull:
    def _counts(self, seed=4, n_a=80, n_b=100, k=3):
        rng = np.random.default_rng(seed)
        truth = three_group_graphon()
        pos_a = sample_positions(n_a, rng)
        pos_b = sample_positions(n_b, rng)
        net_a = sample_graph(truth, pos_a, rng)
        net_b = sample_graph(truth, pos_b, rng)
        return rectangle_counts((net_a, net_b), (pos_a, pos_b), RectanglePartition.equidistant(k))

    def test_deterministic(self):
        counts = self._counts()
        a = simulate_null(counts, 500, np.random.default_rng(9))
        b = simulate_null(counts, 500, np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_sorted_and_single(self):
        counts = self._counts()
        sims = simulate_null(counts, 1, np.random.default_rng(0))
        assert sims.shape == (1,)
        sims = simulate_null(counts, 300, np.random.default_rng(1))
        assert (np.diff(sims) >= 0).all()

    def test_mean_near_cells_used(self):
        counts = self._counts(n_a=150, n_b=200, k=4)
        _, _, usable = statistic_of(counts)
        sims = simulate_null(counts, 4000, np.random.default_rng(2))
        df = usable.sum()
        se = np.sqrt(2.0 * df / 4000)  # chi-squared-like variance
        assert abs(sims.mean() - df) < 4 * se + 0.05 * df


class TestRunTest:
    def test_identical_pair(self):
        rng = np.random.default_rng(5)
        truth = three_group_graphon()
        pos = sample_positions(50, rng)
        net = sample_graph(truth, pos, rng)
        report = run_test((net, net), (pos, pos), RectanglePartition.equidistant(3), rng=np.random.default_rng(0))
        assert report.t == 0.0
        assert report.p_asymptotic == 1.0
        assert report.p_simulated == 1.0
        assert not report.reject_asymptotic and not report.reject_simulated

    def test_p_sim_range(self):
        rng = np.random.default_rng(6)
        truth = three_group_graphon()
        pos_a = sample_positions(60, rng)
        pos_b = sample_positions(80, rng)
        net_a = sample_graph(truth, pos_a, rng)
        net_b = sample_graph(truth, pos_b, rng)
        report = run_test(
            (net_a, net_b), (pos_a, pos_b), RectanglePartition.equidistant(2), n_sims=99, rng=np.random.default_rng(1)
        )
        assert 1 / 100 <= report.p_simulated <= 1.0
        assert report.df == 3
        assert report.cells_used <= 3

    def test_estimated_position_grid(self):
        # rank-adjusted positions keep every interval filled
        rng = np.random.default_rng(7)
        truth = three_group_graphon()
        pos_a = sample_positions(101, rng)
        net_a = sample_graph(truth, pos_a, rng)
        pos_b = sample_positions(120, rng)
        net_b = sample_graph(truth, pos_b, rng)
        ra, rb = rank_adjust(pos_a.u), rank_adjust(pos_b.u)
        k = choose_k(101, 120)
        report = run_test((net_a, net_b), (ra, rb), RectanglePartition.equidistant(k), rng=np.random.default_rng(2))
        assert report.counts.m1.min() >= 1

    def test_report_cell_records(self):
        rng = np.random.default_rng(8)
        truth = three_group_graphon()
        pos = sample_positions(40, rng)
        net = sample_graph(truth, pos, rng)
        report = run_test((net, net), (pos, pos), RectanglePartition.equidistant(2), rng=np.random.default_rng(3))
        recs = report.cell_records()
        assert len(recs) == 3
        assert all(r["m1"] == r["m2"] for r in recs)
        assert {tuple(sorted(r)) for r in recs} == {
            tuple(sorted(["k", "l", "d1", "d2", "m1", "m2", "E1", "V1", "used", "contrib"]))
        }

    def test_label_permutation_leaves_report(self):
        rng = np.random.default_rng(9)
        truth = three_group_graphon()
        pos_a = sample_positions(30, rng)
        pos_b = sample_positions(30, rng)
        net_a = sample_graph(truth, pos_a, rng)
        net_b = sample_graph(truth, pos_b, rng)
        part = RectanglePartition.equidistant(2)
        r1 = run_test((net_a, net_b), (pos_a, pos_b), part, n_sims=200, rng=np.random.default_rng(4))
        perm = rng.permutation(30)
        net_ap = graph_from_edges(
            30, [(int(perm[i]), int(perm[j])) for i, j in zip(*np.nonzero(np.triu(net_a.adj, 1)))]
        )
        pos_ap = NodePositions(pos_a.u[np.argsort(perm)])
        r2 = run_test((net_ap, net_b), (pos_ap, pos_b), part, n_sims=200, rng=np.random.default_rng(4))
        assert r1.t == r2.t and r1.p_simulated == r2.p_simulated


def test_cell_moments_zero_dyad_cells():
    g = graph_from_edges(3, [(0, 1)])
    pos = NodePositions(np.array([0.1, 0.15, 0.2]))  # everything in the first interval
    counts = rectangle_counts((g, g), (pos, pos), RectanglePartition.equidistant(2))
    e1, v1 = cell_moments(counts)
    assert e1.shape == (3,)
    assert (v1[counts.m == 0] == 0).all()
