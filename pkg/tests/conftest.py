"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest

from graphontest.core import Graph, SplineGraphon, graphon_eval


def graph_from_edges(n, edges, labels=None):
    adj = np.zeros((n, n), dtype=np.uint8)
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1
    return Graph(adj, labels=labels)


@pytest.fixture
def path3():
    """3-node path graph 0-1-2."""
    return graph_from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def four_node_graph():
    """Fixed 4-node graph used by the Gibbs oracle checks."""
    return graph_from_edges(4, [(0, 1), (2, 3), (1, 2)])


@pytest.fixture
def hetero_graphon():
    """Explicit non-constant symmetric spline graphon on a 2x2 basis."""
    return SplineGraphon(2, [0.80, 0.25, 0.25, 0.65])


def brute_force_loglik(theta, graphs, positions, eps=1e-6):
    """Term-by-term ordered-pair log-likelihood, independent of the
    vectorized implementation."""
    theta = np.asarray(theta, dtype=float)
    L = int(round(np.sqrt(theta.size)))
    total = 0.0
    for graph, pos in zip(graphs, positions):
        for i in range(graph.n):
            for j in range(graph.n):
                if i == j:
                    continue
                bu = _hat(L, pos.u[i])
                bv = _hat(L, pos.u[j])
                w = float(np.outer(bu, bv).reshape(-1) @ theta)
                w = min(max(w, eps), 1 - eps)
                y = graph.adj[i, j]
                total += y * np.log(w) + (1 - y) * np.log1p(-w)
    return total


def _hat(L, u):
    pos = u * (L - 1)
    c = min(int(pos), L - 2)
    t = pos - c
    out = np.zeros(L)
    out[c] = 1 - t
    out[c + 1] += t
    return out


def grid_posterior_marginal(graph, graphon, node, grid_size=40, eps=1e-6):
    """Quadrature oracle: marginal posterior of one node's position on a
    regular grid of cell midpoints, integrating the joint density of all
    positions over the remaining coordinates."""
    n = graph.n
    mids = (np.arange(grid_size) + 0.5) / grid_size
    w = graphon_eval(graphon, mids[:, None].repeat(grid_size, 1), mids[None, :].repeat(grid_size, 0))
    w = np.clip(w, eps, 1 - eps)
    log_w, log_not_w = np.log(w), np.log1p(-w)
    logw = {}
    for i in range(n):
        for j in range(i + 1, n):
            logw[(i, j)] = log_w if graph.adj[i, j] else log_not_w
    shape = [grid_size] * n
    logdens = np.zeros(shape)
    for (i, j), tab in logw.items():
        expand = [None] * n
        expand[i] = slice(None)
        expand[j] = slice(None)
        logdens = logdens + tab[tuple(expand)]
    logdens -= logdens.max()
    dens = np.exp(logdens)
    axes = tuple(k for k in range(n) if k != node)
    marg = dens.sum(axis=axes)
    return mids, marg / marg.sum()


def grid_search_best_loglik(graphs, positions):
    """Exhaustive log-likelihood maximum for the L=2 basis over the folded
    (t00, t01, t11) parameters on a 0.01-step grid."""
    from graphontest.mstep import DyadDesign

    design = DyadDesign(graphs, positions, 2)
    coef = np.zeros((design.n_dyads, 3))
    for slot in range(4):
        for f in range(3):
            mask = design.fidx4[:, slot] == f
            coef[mask, f] += design.val4[mask, slot]
    grid = np.linspace(0.0, 1.0, 101)
    best = -np.inf
    y = design.y
    for t00 in grid:
        W = (
            (coef[:, 0] * t00)[:, None, None]
            + coef[:, 1][:, None, None] * grid[None, :, None]
            + coef[:, 2][:, None, None] * grid[None, None, :]
        )
        W = np.clip(W, 1e-6, 1 - 1e-6)
        ll = np.tensordot(y, np.log(W), axes=(0, 0)) + np.tensordot(1 - y, np.log1p(-W), axes=(0, 0))
        m = ll.max()
        if m > best:
            best = float(m)
    return best


def ks_distance_to_grid(samples, mids, probs):
    """KS distance between an empirical sample and a piecewise-constant
    density given by cell probabilities at midpoints."""
    edges = np.concatenate(([0.0], (mids[:-1] + mids[1:]) / 2.0, [1.0]))
    oracle_cdf = np.concatenate(([0.0], np.cumsum(probs)))
    samples = np.sort(np.asarray(samples))
    grid = np.linspace(0.0, 1.0, 2001)
    emp = np.searchsorted(samples, grid, side="right") / samples.shape[0]
    oracle = np.interp(grid, edges, oracle_cdf)
    return float(np.max(np.abs(emp - oracle)))
