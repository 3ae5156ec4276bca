"""Gibbs sampling of latent node positions given a fixed graphon.

One sweep proposes a new position for every node in ascending index order
through a normal step on the logit scale; the Metropolis-Hastings ratio
combines the Bernoulli full conditional with the logit-normal proposal
correction u*(1-u*) / (u(1-u)). Posterior means over the retained states are
mapped onto the equidistant grid r/(n+1) by rank to resolve the
monotone-transformation ambiguity of the model.

The sweep loop is compiled with numba when available (pure-numpy fallback
otherwise, same law, slower). Chains for two networks are independent; each
chain owns its generator, so they can run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PROB_EPS, Graph, Graphon, GridGraphon, NodePositions, SplineGraphon, graphon_eval

_POS_EPS = 1e-12  # keep proposals strictly inside (0,1)

try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


@dataclass(frozen=True)
class GibbsConfig:
    """Chain length and proposal tuning.

    ``sigma_v`` is the standard deviation of the logit-scale random walk;
    with ``adapt`` it is rescaled by x1.1 / /1.1 every ``adapt_interval``
    sweeps of the burn-in towards ``target_acceptance``, then frozen so the
    retained part of the chain is a proper Markov chain.
    """

    sigma_v: float = 1.0
    burn_in: int = 50
    thinning: int = 5
    n_keep: int = 30
    adapt: bool = True
    target_acceptance: float = 0.40
    adapt_interval: int = 10

    def __post_init__(self):
        if self.sigma_v <= 0:
            raise ValueError("sigma_v must be positive")
        if self.burn_in < 0 or self.thinning < 1 or self.n_keep < 1:
            raise ValueError("need burn_in >= 0, thinning >= 1, n_keep >= 1")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be >= 1")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ValueError("target_acceptance must lie in (0,1)")


@dataclass
class ChainResult:
    """Retained states plus acceptance bookkeeping."""

    samples: np.ndarray  # (n_keep, n)
    acceptance_rate: float
    acceptance_per_node: np.ndarray
    sigma_v: float  # value in force after burn-in


def _graphon_tables(graphon: Graphon) -> tuple[np.ndarray, int]:
    """Value table plus eval mode for the compiled kernel: node values with
    linear interpolation (0) or cell values with constant lookup (1)."""
    if isinstance(graphon, SplineGraphon):
        return np.ascontiguousarray(graphon.theta_matrix), 0
    if isinstance(graphon, GridGraphon):
        if graphon.mode == "bilinear":
            return np.ascontiguousarray(graphon.values), 0
        return np.ascontiguousarray(graphon.values), 1
    raise TypeError(f"not a graphon: {type(graphon).__name__}")


def full_conditional_logdensity(graphon: Graphon, positions: NodePositions, i: int, u: float, graph: Graph) -> float:
    """Log full conditional of node i at candidate position u (up to an
    additive constant), with probabilities clipped away from 0 and 1."""
    if not 0.0 < u < 1.0:
        raise ValueError("candidate position must lie strictly in (0,1)")
    others = np.delete(np.arange(graph.n), i)
    w = graphon_eval(graphon, np.full(others.shape[0], u), positions.u[others])
    w = np.clip(w, PROB_EPS, 1.0 - PROB_EPS)
    y = graph.adj[i, others].astype(float)
    return float(np.sum(y * np.log(w) + (1.0 - y) * np.log1p(-w)))


def propose(u_cur: float, sigma_v: float, rng: np.random.Generator) -> tuple[float, float]:
    """Logit-normal random-walk proposal and its log proposal ratio
    log[u*(1-u*)] - log[u(1-u)]."""
    if not 0.0 < u_cur < 1.0:
        raise ValueError("current position must lie strictly in (0,1)")
    v = math.log(u_cur / (1.0 - u_cur)) + sigma_v * rng.standard_normal()
    u_star = 1.0 / (1.0 + math.exp(-v)) if v >= 0 else math.exp(v) / (1.0 + math.exp(v))
    u_star = min(max(u_star, _POS_EPS), 1.0 - _POS_EPS)
    log_ratio = math.log(u_star * (1.0 - u_star)) - math.log(u_cur * (1.0 - u_cur))
    return u_star, log_ratio


def mh_accept(
    graphon: Graphon,
    positions: NodePositions,
    i: int,
    u_star: float,
    log_proposal_ratio: float,
    rng: np.random.Generator,
    graph: Graph,
) -> tuple[bool, float]:
    """Accept/reject the proposal; returns the decision and the position the
    chain keeps for node i."""
    u_cur = float(positions.u[i])
    delta = full_conditional_logdensity(graphon, positions, i, u_star, graph) - full_conditional_logdensity(
        graphon, positions, i, u_cur, graph
    )
    if math.log(rng.random()) < delta + log_proposal_ratio:
        return True, u_star
    return False, u_cur


@njit(cache=True)
def _sweep_kernel(adj, table, mode, u, civ, tiv, sigma, normals, uniforms, acc_node):  # pragma: no cover
    n = u.shape[0]
    L = table.shape[0]
    eps = 1e-6
    accepted = 0
    for s in range(normals.shape[0]):
        for i in range(n):
            ui = u[i]
            v = np.log(ui / (1.0 - ui)) + sigma * normals[s, i]
            if v >= 0.0:
                us = 1.0 / (1.0 + np.exp(-v))
            else:
                ev = np.exp(v)
                us = ev / (1.0 + ev)
            if us < 1e-12:
                us = 1e-12
            elif us > 1.0 - 1e-12:
                us = 1.0 - 1e-12

            if mode == 0:
                ps = us * (L - 1)
                cs = int(ps)
                if cs > L - 2:
                    cs = L - 2
                ts = ps - cs
                cc = civ[i]
                tc = tiv[i]
            else:
                cs = int(us * L)
                if cs > L - 1:
                    cs = L - 1
                ts = 0.0
                cc = civ[i]
                tc = 0.0

            delta = 0.0
            for j in range(n):
                if j == i:
                    continue
                cj = civ[j]
                if mode == 0:
                    tj = tiv[j]
                    ws = (1.0 - ts) * ((1.0 - tj) * table[cs, cj] + tj * table[cs, cj + 1]) + ts * (
                        (1.0 - tj) * table[cs + 1, cj] + tj * table[cs + 1, cj + 1]
                    )
                    wc = (1.0 - tc) * ((1.0 - tj) * table[cc, cj] + tj * table[cc, cj + 1]) + tc * (
                        (1.0 - tj) * table[cc + 1, cj] + tj * table[cc + 1, cj + 1]
                    )
                else:
                    ws = table[cs, cj]
                    wc = table[cc, cj]
                if ws < eps:
                    ws = eps
                elif ws > 1.0 - eps:
                    ws = 1.0 - eps
                if wc < eps:
                    wc = eps
                elif wc > 1.0 - eps:
                    wc = 1.0 - eps
                if adj[i, j] == 1:
                    delta += np.log(ws / wc)
                else:
                    delta += np.log((1.0 - ws) / (1.0 - wc))

            log_ratio = np.log(us * (1.0 - us)) - np.log(ui * (1.0 - ui))
            if np.log(uniforms[s, i]) < delta + log_ratio:
                u[i] = us
                civ[i] = cs
                tiv[i] = ts
                acc_node[i] += 1
                accepted += 1
    return accepted


def _sweep_python(adj, table, mode, u, civ, tiv, sigma, normals, uniforms, acc_node):
    """Numpy fallback with the same update law as the compiled kernel."""
    n = u.shape[0]
    L = table.shape[0]
    accepted = 0
    y = adj.astype(bool)
    for s in range(normals.shape[0]):
        for i in range(n):
            ui = u[i]
            v = math.log(ui / (1.0 - ui)) + sigma * normals[s, i]
            us = 1.0 / (1.0 + math.exp(-v)) if v >= 0 else math.exp(v) / (1.0 + math.exp(v))
            us = min(max(us, _POS_EPS), 1.0 - _POS_EPS)
            if mode == 0:
                ps = us * (L - 1)
                cs = min(int(ps), L - 2)
                ts = ps - cs
                row_s = (1.0 - ts) * table[cs] + ts * table[cs + 1]
                row_c = (1.0 - tiv[i]) * table[civ[i]] + tiv[i] * table[civ[i] + 1]
                ws = (1.0 - tiv) * row_s[civ] + tiv * row_s[np.minimum(civ + 1, L - 1)]
                wc = (1.0 - tiv) * row_c[civ] + tiv * row_c[np.minimum(civ + 1, L - 1)]
            else:
                cs = min(int(us * L), L - 1)
                ts = 0.0
                ws = table[cs, civ]
                wc = table[civ[i], civ]
            ws = np.clip(ws, PROB_EPS, 1.0 - PROB_EPS)
            wc = np.clip(wc, PROB_EPS, 1.0 - PROB_EPS)
            mask = np.ones(n, dtype=bool)
            mask[i] = False
            delta = float(
                np.sum(np.where(y[i, mask], np.log(ws[mask]) - np.log(wc[mask]), np.log1p(-ws[mask]) - np.log1p(-wc[mask])))
            )
            log_ratio = math.log(us * (1.0 - us)) - math.log(ui * (1.0 - ui))
            if math.log(uniforms[s, i]) < delta + log_ratio:
                u[i] = us
                civ[i] = cs
                tiv[i] = ts
                acc_node[i] += 1
                accepted += 1
    return accepted


_sweeps = _sweep_kernel if _HAVE_NUMBA else _sweep_python


def run_chain(
    graph: Graph,
    graphon: Graphon,
    config: GibbsConfig,
    rng: np.random.Generator,
    init: NodePositions | None = None,
) -> ChainResult:
    """Run burn_in + n_keep * thinning sweeps and keep every thinning-th
    post-burn-in state.

    Node updates inside a sweep are sequential in ascending index; all
    randomness comes from ``rng``, so results are reproducible. The chain
    starts from ``init`` or, by default, from the equidistant grid.
    """
    n = graph.n
    table, mode = _graphon_tables(graphon)
    L = table.shape[0]
    if init is None:
        u = np.arange(1, n + 1, dtype=float) / (n + 1)
    else:
        if len(init) != n:
            raise ValueError("init positions length must match node count")
        u = np.array(init.u, dtype=float)

    if mode == 0:
        pos = u * (L - 1)
        civ = np.minimum(pos.astype(np.int64), L - 2)
        tiv = pos - civ
    else:
        civ = np.minimum((u * L).astype(np.int64), L - 1)
        tiv = np.zeros(n)

    adj = np.ascontiguousarray(graph.adj)
    acc_node = np.zeros(n, dtype=np.int64)
    sigma = config.sigma_v

    # burn-in, with optional step-size adaptation per block
    done = 0
    while done < config.burn_in:
        block = min(config.adapt_interval, config.burn_in - done)
        normals = rng.standard_normal((block, n))
        uniforms = rng.random((block, n))
        before = int(acc_node.sum())
        _sweeps(adj, table, mode, u, civ, tiv, sigma, normals, uniforms, acc_node)
        done += block
        if config.adapt and block == config.adapt_interval:
            rate = (int(acc_node.sum()) - before) / (block * n)
            sigma = sigma * 1.1 if rate > config.target_acceptance else sigma / 1.1

    # retained phase, frozen step size
    acc_node[:] = 0
    samples = np.empty((config.n_keep, n))
    for k in range(config.n_keep):
        normals = rng.standard_normal((config.thinning, n))
        uniforms = rng.random((config.thinning, n))
        _sweeps(adj, table, mode, u, civ, tiv, sigma, normals, uniforms, acc_node)
        samples[k] = u
    total_updates = config.n_keep * config.thinning * n
    return ChainResult(
        samples=samples,
        acceptance_rate=float(acc_node.sum()) / total_updates,
        acceptance_per_node=acc_node / (config.n_keep * config.thinning),
        sigma_v=sigma,
    )


def posterior_means(samples: np.ndarray) -> np.ndarray:
    """Per-node mean over the retained states."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValueError("need a (n_keep, n) sample matrix with n_keep >= 1")
    return samples.mean(axis=0)


def rank_adjust(u_bar: np.ndarray) -> NodePositions:
    """Map a position vector onto the grid {r/(n+1)} by rank.

    Order-preserving; ties broken by ascending node index; idempotent.
    """
    u_bar = np.asarray(u_bar, dtype=float)
    n = u_bar.shape[0]
    if n < 2:
        raise ValueError("need at least 2 positions")
    order = np.argsort(u_bar, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return NodePositions(ranks / (n + 1.0))
