"""Hypergeometric conditional law of a cell count.

For a cell with ``m`` pooled dyads, ``d`` pooled edges, and ``m1`` dyads in
network 1, the network-1 edge count follows Hyp(m, d, m1) under homogeneity,
supported on [max(0, d-(m-m1)), min(d, m1)].
"""

from __future__ import annotations

import numpy as np

# above this population size the pmf table is skipped in favor of urn draws
_URN_THRESHOLD = 100_000


def hypergeom_support(m: int, d: int, m1: int) -> tuple[int, int]:
    return max(0, d - (m - m1)), min(d, m1)


def hypergeom_moments(m: int, d: int, m1: int) -> tuple[float, float]:
    """Conditional mean and variance of the network-1 count in a cell.

    A zero variance marks a degenerate cell that carries no information and
    is omitted from the test statistic.
    """
    if m < 1:
        raise ValueError("cell with no dyads is undefined")
    if not 0 <= d <= m or not 0 <= m1 <= m:
        raise ValueError("need 0 <= d <= m and 0 <= m1 <= m")
    frac = d / m
    e1 = m1 * frac
    if m == 1:
        return e1, 0.0
    v1 = m1 * frac * ((m - d) / m) * ((m - m1) / (m - 1))
    return e1, v1


def hypergeom_pmf(m: int, d: int, m1: int) -> tuple[int, np.ndarray]:
    """Exact pmf table over the support; returns (support_min, probabilities).

    Built by the stable ratio recursion
    p(x+1)/p(x) = (d-x)(m1-x) / ((x+1)(m-d-m1+x+1)).
    """
    lo, hi = hypergeom_support(m, d, m1)
    k = np.arange(lo, hi + 1)
    if lo == hi:
        return lo, np.ones(1)
    with np.errstate(divide="ignore"):
        log_ratio = (
            np.log((d - k[:-1]).astype(float))
            + np.log((m1 - k[:-1]).astype(float))
            - np.log((k[:-1] + 1).astype(float))
            - np.log((m - d - m1 + k[:-1] + 1).astype(float))
        )
    log_p = np.concatenate(([0.0], np.cumsum(log_ratio)))
    log_p -= log_p.max()
    p = np.exp(log_p)
    p /= p.sum()
    return lo, p


def hypergeom_sample(m: int, d: int, m1: int, rng: np.random.Generator) -> int:
    """One draw from Hyp(m, d, m1).

    Inverse-cdf on the exact pmf table for moderate populations; for very
    large ``m`` the table is avoided by simulating the urn count-by-count.
    """
    lo, hi = hypergeom_support(m, d, m1)
    if lo == hi:
        return lo
    if m <= _URN_THRESHOLD:
        start, p = hypergeom_pmf(m, d, m1)
        idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
        # a uniform draw above the rounded cdf top must not leave the support
        return start + min(idx, p.shape[0] - 1)
    return _urn_draw(m, d, m1, rng)


def _urn_draw(m: int, d: int, m1: int, rng: np.random.Generator) -> int:
    good, total, hits = d, m, 0
    for _ in range(m1):
        if rng.random() * total < good:
            hits += 1
            good -= 1
        total -= 1
    return hits


def hypergeom_sample_many(m: int, d: int, m1: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized draws, identical law to :func:`hypergeom_sample`."""
    lo, hi = hypergeom_support(m, d, m1)
    if lo == hi:
        return np.full(size, lo, dtype=np.int64)
    if m <= _URN_THRESHOLD:
        start, p = hypergeom_pmf(m, d, m1)
        cdf = np.cumsum(p)
        idx = np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)
        return start + np.minimum(idx, p.shape[0] - 1)
    return np.array([_urn_draw(m, d, m1, rng) for _ in range(size)], dtype=np.int64)
