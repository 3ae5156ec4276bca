"""Penalized constrained maximum-likelihood fit of the joint spline graphon.

Given node positions for both networks, the edge probabilities are a linear
form w_ij = B_ij theta in the tensor-product hat basis, and theta maximizes

    l_p(theta, lambda) = l(theta) - 0.5 * lambda * theta' P theta

subject to 0 <= theta_kl <= 1 and theta_kl == theta_lk, where P penalizes
first differences between neighboring coefficients along both axes. Symmetry
is handled by folding: the optimizer works on the L(L+1)/2 upper-triangular
parameters, which turns each Fisher-scoring step into a box-constrained QP
solved by a projected-Newton active-set method. The penalty weight is chosen
by minimizing the corrected AIC over a grid.

Sums over dyads follow the ordered-pair convention (j != i, every dyad
twice); this scales l, s, F by two against an unordered convention without
moving the maximizer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import PROB_EPS, SplineGraphon, hat_interval
from .errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

_RIDGE = 1e-8


@dataclass(frozen=True)
class MStepConfig:
    """Basis size, penalty grid, and stopping rules of the spline fit."""

    L: int
    lambda_grid: np.ndarray = field(default_factory=lambda: default_lambda_grid())
    max_scoring_iters: int = 50
    scoring_tol: float = 1e-5
    qp_tol: float = 1e-8

    def __post_init__(self):
        if self.L < 2:
            raise ConfigError("basis size L must be >= 2")
        grid = np.asarray(self.lambda_grid, dtype=float).reshape(-1)
        if grid.size == 0:
            raise ConfigError("lambda grid must be nonempty")
        if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise ConfigError("lambda grid must be nonnegative and sorted ascending")
        grid.setflags(write=False)
        object.__setattr__(self, "lambda_grid", grid)
        if self.max_scoring_iters < 1:
            raise ConfigError("max_scoring_iters must be >= 1")
        if self.scoring_tol <= 0 or self.qp_tol <= 0:
            raise ConfigError("tolerances must be positive")


def default_lambda_grid() -> np.ndarray:
    """25 log-spaced penalty weights from nearly unpenalized to nearly
    constant fits."""
    return np.logspace(-2.0, 6.0, 25)


def default_basis_size(n1: int, n2: int) -> int:
    """Rather-large basis rule: sqrt of the smaller network, kept in [8, 25];
    the penalty does the actual smoothing."""
    return int(np.clip(int(np.sqrt(min(n1, n2))), 8, 25))


@dataclass(frozen=True)
class FitResult:
    """Selected penalized fit: graphon, penalty, fit quality."""

    graphon: SplineGraphon
    lambda_: float
    loglik: float
    df: float
    aicc: float


# ---------------------------------------------------------------------------
# folding of the symmetric parameterization

def fold_map(L: int) -> tuple[np.ndarray, int]:
    """Map from full row-major index (k,l) to the index of the unordered pair
    {k,l} in the upper-triangular list; returns (map, folded dimension)."""
    kk, ll = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    a = np.minimum(kk, ll)
    b = np.maximum(kk, ll)
    tri = np.zeros((L, L), dtype=np.int64)
    tri[np.triu_indices(L)] = np.arange(L * (L + 1) // 2)
    return tri[a, b].reshape(-1), L * (L + 1) // 2


def unfold(phi: np.ndarray, L: int) -> np.ndarray:
    """Expand folded parameters to the full symmetric theta vector."""
    fmap, _ = fold_map(L)
    return np.asarray(phi, dtype=float)[fmap]


def fold(theta: np.ndarray, L: int) -> np.ndarray:
    """Extract the upper-triangular parameters of a symmetric theta vector."""
    mat = np.asarray(theta, dtype=float).reshape(L, L)
    return mat[np.triu_indices(L)]


# ---------------------------------------------------------------------------
# dyad design: cached sparse basis structure of one (graphs, positions) pair

class DyadDesign:
    """Per-dyad active basis entries for fast likelihood/score/Fisher sums.

    Each ordered pair (i, j), i != j, activates at most four tensor basis
    entries; their indices and values are fixed while positions are fixed, so
    they are assembled once and reused across theta and lambda.
    """

    def __init__(self, graphs, positions, L: int):
        graphs = list(graphs)
        positions = list(positions)
        if len(graphs) != len(positions):
            raise ValueError("need one position vector per graph")
        idx_parts, val_parts, y_parts = [], [], []
        for graph, pos in zip(graphs, positions):
            if len(pos) != graph.n:
                raise ValueError("positions length must match node count")
            n = graph.n
            c, t = hat_interval(L, pos.u)
            ii, jj = np.nonzero(~np.eye(n, dtype=bool))
            ci, ti = c[ii], t[ii]
            cj, tj = c[jj], t[jj]
            idx = np.empty((ii.shape[0], 4), dtype=np.int64)
            idx[:, 0] = ci * L + cj
            idx[:, 1] = ci * L + cj + 1
            idx[:, 2] = (ci + 1) * L + cj
            idx[:, 3] = (ci + 1) * L + cj + 1
            val = np.empty((ii.shape[0], 4))
            val[:, 0] = (1 - ti) * (1 - tj)
            val[:, 1] = (1 - ti) * tj
            val[:, 2] = ti * (1 - tj)
            val[:, 3] = ti * tj
            idx_parts.append(idx)
            val_parts.append(val)
            y_parts.append(graph.adj[ii, jj].astype(float))
        self.L = L
        self.idx4 = np.concatenate(idx_parts)
        self.val4 = np.concatenate(val_parts)
        self.y = np.concatenate(y_parts)
        self.n_dyads = self.y.shape[0]  # ordered count, pooled

        self.fmap, self.M = fold_map(L)
        self.fidx4 = self.fmap[self.idx4]
        self._fscore_keys = self.fidx4.reshape(-1)
        self._ffisher_keys = (self.fidx4[:, :, None] * self.M + self.fidx4[:, None, :]).reshape(-1)
        self._outer16 = (self.val4[:, :, None] * self.val4[:, None, :]).reshape(self.n_dyads, 16)

    def probs(self, phi: np.ndarray) -> np.ndarray:
        w = np.einsum("ij,ij->i", self.val4, phi[self.fidx4])
        return np.clip(w, PROB_EPS, 1.0 - PROB_EPS)

    def loglik(self, phi: np.ndarray) -> float:
        w = self.probs(phi)
        return float(self.y @ np.log(w) + (1.0 - self.y) @ np.log1p(-w))

    def score_folded(self, phi: np.ndarray) -> np.ndarray:
        w = self.probs(phi)
        coef = self.y / w - (1.0 - self.y) / (1.0 - w)
        return np.bincount(self._fscore_keys, weights=(self.val4 * coef[:, None]).reshape(-1), minlength=self.M)

    def fisher_folded(self, phi: np.ndarray) -> np.ndarray:
        return self._fisher_from_probs(self.probs(phi))

    def _fisher_from_probs(self, w: np.ndarray) -> np.ndarray:
        z = 1.0 / (w * (1.0 - w))
        weights = (self._outer16 * z[:, None]).reshape(-1)
        return np.bincount(self._ffisher_keys, weights=weights, minlength=self.M * self.M).reshape(self.M, self.M)

    def score_fisher_folded(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Score and information at one point, sharing the probability pass."""
        w = self.probs(phi)
        coef = self.y / w - (1.0 - self.y) / (1.0 - w)
        s = np.bincount(self._fscore_keys, weights=(self.val4 * coef[:, None]).reshape(-1), minlength=self.M)
        return s, self._fisher_from_probs(w)


# ---------------------------------------------------------------------------
# full-parameterization operations

def _as_design(theta, graphs, positions) -> tuple[DyadDesign, np.ndarray, int]:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    L = int(round(np.sqrt(theta.shape[0])))
    if L * L != theta.shape[0]:
        raise ValueError("theta length must be a perfect square L^2")
    return DyadDesign(graphs, positions, L), theta, L


def log_likelihood(theta, graphs, positions) -> float:
    """Bernoulli log-likelihood pooled over networks and ordered pairs.

    Defined for any theta in the full parameterization (symmetry is not
    assumed here, so finite-difference checks along single coordinates work).
    """
    design, theta, L = _as_design(theta, graphs, positions)
    w = np.clip(np.einsum("ij,ij->i", design.val4, theta[design.idx4]), PROB_EPS, 1.0 - PROB_EPS)
    return float(design.y @ np.log(w) + (1.0 - design.y) @ np.log1p(-w))


def score(theta, graphs, positions) -> np.ndarray:
    """Gradient of the log-likelihood in the full L^2 parameterization."""
    design, theta, L = _as_design(theta, graphs, positions)
    w = np.clip(np.einsum("ij,ij->i", design.val4, theta[design.idx4]), PROB_EPS, 1.0 - PROB_EPS)
    coef = design.y / w - (1.0 - design.y) / (1.0 - w)
    return np.bincount(design.idx4.reshape(-1), weights=(design.val4 * coef[:, None]).reshape(-1), minlength=L * L)


def fisher_info(theta, graphs, positions) -> np.ndarray:
    """Expected information matrix in the full L^2 parameterization."""
    design, theta, L = _as_design(theta, graphs, positions)
    w = np.clip(np.einsum("ij,ij->i", design.val4, theta[design.idx4]), PROB_EPS, 1.0 - PROB_EPS)
    z = 1.0 / (w * (1.0 - w))
    keys = (design.idx4[:, :, None] * (L * L) + design.idx4[:, None, :]).reshape(-1)
    weights = (design._outer16 * z[:, None]).reshape(-1)
    return np.bincount(keys, weights=weights, minlength=L ** 4).reshape(L * L, L * L)


def penalty_matrix(L: int) -> np.ndarray:
    """First-difference roughness penalty over both axes of the coefficient
    grid: (J (x) I)'(J (x) I) + (I (x) J)'(I (x) J); PSD with the constant
    vector as null space."""
    if L < 2:
        raise ValueError("need L >= 2")
    J = np.zeros((L - 1, L))
    J[np.arange(L - 1), np.arange(L - 1)] = 1.0
    J[np.arange(L - 1), np.arange(1, L)] = -1.0
    JtJ = J.T @ J
    eye = np.eye(L)
    return np.kron(JtJ, eye) + np.kron(eye, JtJ)


def penalized_quantities(theta, lam: float, graphs, positions) -> tuple[float, np.ndarray, np.ndarray]:
    """Penalized log-likelihood, score, and information at (theta, lambda)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    L = int(round(np.sqrt(theta.shape[0])))
    P = penalty_matrix(L)
    ll = log_likelihood(theta, graphs, positions)
    s = score(theta, graphs, positions)
    F = fisher_info(theta, graphs, positions)
    return ll - 0.5 * lam * float(theta @ P @ theta), s - lam * P @ theta, F + lam * P


# ---------------------------------------------------------------------------
# box-constrained quadratic programming by projected Newton

def _boxqp(H: np.ndarray, g: np.ndarray, x0: np.ndarray, tol: float, max_iter: int = 100) -> np.ndarray:
    """Minimize 0.5 x'Hx + g'x over the unit box [0,1]^n.

    Active-set projected Newton: clamp coordinates pressed against their
    bound, take a Newton step on the free block, backtrack along the
    projected segment.
    """
    n = H.shape[0]
    x = np.clip(x0, 0.0, 1.0)

    def q(v):
        return 0.5 * float(v @ H @ v) + float(g @ v)

    val = q(x)
    for _ in range(max_iter):
        grad = H @ x + g
        clamped = ((x <= tol) & (grad > 0)) | ((x >= 1.0 - tol) & (grad < 0))
        free = ~clamped
        if not free.any():
            break
        gf = grad[free]
        if np.max(np.abs(gf)) < tol:
            break
        Hff = H[np.ix_(free, free)]
        d = np.zeros(n)
        d[free] = -_chol_solve(Hff, gf)
        step = 1.0
        improved = False
        for _ in range(30):
            xc = np.clip(x + step * d, 0.0, 1.0)
            vc = q(xc)
            if vc < val - 1e-16:
                x, val = xc, vc
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return x


def _chol_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with escalating ridge for semidefinite blocks."""
    ridge = 0.0
    scale = max(float(np.trace(A)) / A.shape[0], 1.0)
    for _ in range(12):
        try:
            c = np.linalg.cholesky(A + ridge * np.eye(A.shape[0]))
            z = np.linalg.solve(c, b)
            return np.linalg.solve(c.T, z)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 10.0, _RIDGE * scale)
    raise NumericalError("curvature matrix is not positive definite even after ridging")


# ---------------------------------------------------------------------------
# Fisher scoring under constraints

def _scoring_folded(
    design: DyadDesign,
    lam: float,
    phi0: np.ndarray,
    pen_folded: np.ndarray,
    config: MStepConfig,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Maximize the folded penalized log-likelihood from a feasible start.

    Returns the maximizer plus, when the loop ended on a zero step, the
    information matrix already evaluated there (so callers can reuse it).
    """
    phi = np.clip(np.asarray(phi0, dtype=float), 0.0, 1.0)

    def lp(p):
        return design.loglik(p) - 0.5 * lam * float(p @ pen_folded @ p)

    cur = lp(phi)
    fisher_here = None
    for _ in range(config.max_scoring_iters):
        s, F = design.score_fisher_folded(phi)
        s_p = s - lam * pen_folded @ phi
        H = F + lam * pen_folded
        x = _boxqp(H, -(H @ phi + s_p), phi, config.qp_tol)
        delta = x - phi
        if np.max(np.abs(delta)) < config.qp_tol:
            fisher_here = F
            break
        step = 1.0
        new = None
        for _ in range(20):
            cand = phi + step * delta
            v = lp(cand)
            if v >= cur - config.qp_tol:
                new = (cand, v)
                break
            step *= 0.5
        if new is None:
            fisher_here = F
            break
        phi, prev = new[0], cur
        cur = new[1]
        if abs(cur - prev) < config.scoring_tol * (1.0 + abs(prev)):
            break
    return np.clip(phi, 0.0, 1.0), fisher_here


def constrained_fisher_scoring(graphs, positions, lam: float, config: MStepConfig, theta_init) -> np.ndarray:
    """Penalized constrained fit at a fixed penalty weight; returns the full
    symmetric theta vector."""
    theta_init = np.asarray(theta_init, dtype=float).reshape(-1)
    if theta_init.min() < -config.qp_tol or theta_init.max() > 1 + config.qp_tol:
        raise ValueError("theta_init must be feasible (inside the unit box)")
    design = DyadDesign(graphs, positions, config.L)
    pen = folded_penalty(config.L)
    phi, _ = _scoring_folded(design, lam, fold(theta_init, config.L), pen, config)
    return unfold(phi, config.L)


def folded_penalty(L: int) -> np.ndarray:
    """Penalty matrix expressed on the folded upper-triangular parameters."""
    fmap, M = fold_map(L)
    G = np.zeros((L * L, M))
    G[np.arange(L * L), fmap] = 1.0
    return G.T @ penalty_matrix(L) @ G


def effective_df(
    design: DyadDesign,
    lam: float,
    phi: np.ndarray,
    pen_folded: np.ndarray,
    fisher: np.ndarray | None = None,
) -> float:
    """Model complexity tr{F_p^-1 F} of the penalized fit, on the folded
    parameterization; falls back to a small ridge when F_p is singular.
    ``fisher`` may pass the information matrix if already evaluated at
    ``phi``."""
    F = design.fisher_folded(phi) if fisher is None else fisher
    Fp = F + lam * pen_folded
    try:
        return float(np.trace(np.linalg.solve(Fp, F)))
    except np.linalg.LinAlgError:
        logger.warning("singular penalized information at lambda=%g; ridging", lam)
        scale = max(float(np.trace(Fp)) / Fp.shape[0], 1.0)
        return float(np.trace(np.linalg.solve(Fp + _RIDGE * scale * np.eye(Fp.shape[0]), F)))


def aicc(loglik: float, df: float, n_dyads: int) -> float:
    """Corrected AIC with the pooled ordered-dyad count as sample size."""
    denom = n_dyads - df - 1.0
    if denom <= 0:
        raise ConfigError("AICc correction undefined: need n_dyads > df + 1")
    return -2.0 * loglik + 2.0 * df + 2.0 * df * (df + 1.0) / denom


def pooled_density(graphs) -> float:
    """Edge share among ordered dyads, pooled over the networks."""
    edges = sum(int(g.adj.sum()) for g in graphs)
    dyads = sum(g.n * (g.n - 1) for g in graphs)
    return edges / dyads


def select_lambda(
    graphs,
    positions,
    config: MStepConfig,
    theta_init=None,
    design: DyadDesign | None = None,
) -> FitResult:
    """Fit every penalty weight in the grid (warm-starting each fit from the
    previous one) and keep the AICc minimizer; ties go to the smaller lambda."""
    if design is None:
        design = DyadDesign(graphs, positions, config.L)
    pen = folded_penalty(config.L)
    # the ordered-pair sums count every dyad twice; the selection criterion
    # must see one likelihood contribution per independent observation, so it
    # runs on the per-dyad (unordered) scale - otherwise the halved effective
    # complexity penalty lets the fit chase noise
    n_dyads = design.n_dyads // 2
    if theta_init is None:
        phi = np.full(design.M, pooled_density(graphs))
    else:
        phi = fold(np.asarray(theta_init, dtype=float), config.L)
    best = None
    for lam in config.lambda_grid:
        phi, fisher = _scoring_folded(design, float(lam), phi, pen, config)
        ll = design.loglik(phi)
        df = effective_df(design, float(lam), phi, pen, fisher=fisher)
        crit = aicc(ll / 2.0, df, n_dyads)
        if best is None or crit < best[0]:
            best = (crit, float(lam), ll, df, phi.copy())
    crit, lam, ll, df, phi_best = best
    return FitResult(
        graphon=SplineGraphon(config.L, unfold(phi_best, config.L)),
        lambda_=lam,
        loglik=ll,
        df=df,
        aicc=crit,
    )
