"""Domain types and linear hat-basis algebra shared by all other modules.

A graphon is a symmetric function w: [0,1]^2 -> [0,1]; here it is carried
either by a tensor-product linear B-spline coefficient vector
(:class:`SplineGraphon`) or by a plain value grid (:class:`GridGraphon`).
All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# probability clip used inside every Bernoulli log-likelihood evaluation;
# the constrained spline fit is allowed to touch 0/1 exactly
PROB_EPS = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Graph:
    """Undirected simple binary network.

    ``adj`` is an n x n symmetric 0/1 matrix with zero diagonal; optional
    ``labels`` name the nodes (unique, length n).
    """

    adj: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 2:
            raise ValueError("a graph needs at least 2 nodes")
        vals = np.unique(adj)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.diagonal(adj).any():
            raise ValueError("adjacency diagonal must be zero (no self-loops)")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != adj.shape[0]:
                raise ValueError("labels length must match node count")
            if len(set(labels)) != len(labels):
                raise ValueError("labels must be unique")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "adj", _frozen(adj.astype(np.uint8)))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum()) // 2

    def density(self) -> float:
        n = self.n
        return 2.0 * self.n_edges / (n * (n - 1))


@dataclass(frozen=True)
class NodePositions:
    """Latent coordinates of the nodes, strictly inside (0,1)."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ValueError("positions must be a 1-d vector")
        if not ((u > 0.0) & (u < 1.0)).all():
            raise ValueError("positions must lie strictly in (0,1)")
        object.__setattr__(self, "u", _frozen(u))

    def __len__(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class SplineGraphon:
    """Tensor-product linear B-spline graphon.

    ``theta`` has length L^2, row-major over index pairs (k,l); the knots are
    equidistant on [0,1] including both endpoints, so the basis functions are
    hat functions with half-hats at the boundary. Symmetry theta_kl == theta_lk
    and the [0,1] box are enforced at construction.
    """

    L: int
    theta: np.ndarray

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("basis size L must be >= 2")
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.L * self.L:
            raise ValueError(f"theta must have length L^2 = {self.L * self.L}")
        if theta.min() < -1e-9 or theta.max() > 1 + 1e-9:
            raise ValueError("theta must lie in [0,1]")
        theta = np.clip(theta, 0.0, 1.0)
        mat = theta.reshape(self.L, self.L)
        if not np.allclose(mat, mat.T, atol=1e-12):
            raise ValueError("theta must be symmetric: theta_kl == theta_lk")
        # store the exactly symmetrized vector
        theta = ((mat + mat.T) / 2.0).reshape(-1)
        object.__setattr__(self, "theta", _frozen(theta))

    @property
    def theta_matrix(self) -> np.ndarray:
        return self.theta.reshape(self.L, self.L)

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.L)


@dataclass(frozen=True)
class GridGraphon:
    """Graphon carried by an m x m symmetric value grid.

    ``mode='constant'`` treats values as cell heights on the regular m x m
    partition of [0,1]^2; ``mode='bilinear'`` treats them as node values on the
    (m-1)-cell lattice and interpolates bilinearly (identical to a linear
    B-spline surface with L = m).
    """

    values: np.ndarray
    mode: str = "bilinear"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError("grid values must be a square matrix")
        if self.mode not in ("constant", "bilinear"):
            raise ValueError("mode must be 'constant' or 'bilinear'")
        if self.mode == "bilinear" and vals.shape[0] < 2:
            raise ValueError("bilinear mode needs at least a 2x2 grid")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("grid values must lie in [0,1]")
        if not np.allclose(vals, vals.T, atol=1e-12):
            raise ValueError("grid values must be symmetric")
        vals = (vals + vals.T) / 2.0
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def m(self) -> int:
        return self.values.shape[0]


Graphon = SplineGraphon | GridGraphon


def _check_unit(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name} must lie in [0,1]")
    return x


def hat_interval(L: int, u) -> tuple[np.ndarray, np.ndarray]:
    """Compact support of the hat basis at ``u``: interval index c in
    [0, L-2] and fractional offset t, so that basis c carries weight 1-t and
    basis c+1 carries weight t. Vectorized over ``u``."""
    u = _check_unit(u, "u")
    pos = u * (L - 1)
    c = np.minimum(pos.astype(np.int64), L - 2)
    return c, pos - c


def spline_basis(L: int, u: float) -> np.ndarray:
    """Linear hat-function values at ``u`` on L equidistant knots.

    Nonnegative, sums to one, at most two entries nonzero, reaches 1 exactly
    at the knots. ``u = 1`` loads the last basis function (closed boundary).
    """
    if L < 2:
        raise ValueError("basis size L must be >= 2")
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    c, t = hat_interval(L, np.atleast_1d(u))
    out = np.zeros((c.shape[0], L))
    rows = np.arange(c.shape[0])
    out[rows, c] = 1.0 - t
    out[rows, c + 1] += t
    return out[0] if scalar else out


def tensor_basis(L: int, u: float, v: float) -> np.ndarray:
    """Row of the tensor-product basis at (u, v): entry (k,l) at position
    k*L + l equals spline_basis(L,u)[k] * spline_basis(L,v)[l]."""
    bu = spline_basis(L, u)
    bv = spline_basis(L, v)
    return np.outer(bu, bv).reshape(-1)


def graphon_eval(g: Graphon, u, v):
    """Evaluate a graphon at coordinates (u, v) in [0,1]^2 (vectorized)."""
    u = _check_unit(u, "u")
    v = _check_unit(v, "v")
    scalar = u.ndim == 0 and v.ndim == 0
    if isinstance(g, SplineGraphon):
        out = _bilinear_eval(g.theta_matrix, u, v)
    elif isinstance(g, GridGraphon):
        if g.mode == "bilinear":
            out = _bilinear_eval(g.values, u, v)
        else:
            m = g.m
            iu = np.minimum((u * m).astype(np.int64), m - 1)
            iv = np.minimum((v * m).astype(np.int64), m - 1)
            out = g.values[iu, iv]
    else:
        raise TypeError(f"not a graphon: {type(g).__name__}")
    return float(out) if scalar else out


def _bilinear_eval(node_values: np.ndarray, u, v):
    # evaluate at the sorted pair so symmetry holds bit-exactly
    u, v = np.minimum(u, v), np.maximum(u, v)
    L = node_values.shape[0]
    cu, tu = hat_interval(L, u)
    cv, tv = hat_interval(L, v)
    return (
        (1 - tu) * ((1 - tv) * node_values[cu, cv] + tv * node_values[cu, cv + 1])
        + tu * ((1 - tv) * node_values[cu + 1, cv] + tv * node_values[cu + 1, cv + 1])
    )


def axis_weights(L: int) -> np.ndarray:
    """Integral of each hat basis function over [0,1]: half-width at the two
    boundary knots, full width inside. Sums to one."""
    h = 1.0 / (L - 1)
    w = np.full(L, h)
    w[0] = w[-1] = h / 2.0
    return w


def graphon_mean(g: Graphon) -> float:
    """Integral of the graphon over the unit square (closed form)."""
    if isinstance(g, SplineGraphon):
        w = axis_weights(g.L)
        return float(w @ g.theta_matrix @ w)
    if isinstance(g, GridGraphon):
        if g.mode == "bilinear":
            w = axis_weights(g.m)
            return float(w @ g.values @ w)
        return float(g.values.mean())
    raise TypeError(f"not a graphon: {type(g).__name__}")
