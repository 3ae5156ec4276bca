"""EM-type loop: spline M-step and Gibbs E-step alternated to convergence,
plus the multi-restart driver.

Each iteration refits the joint graphon on the incoming positions, then
refreshes both networks' positions from their posterior means (rank-adjusted
onto the equidistant grid). Convergence is declared once the mean absolute
position change of both networks falls below a threshold. Restarts differ
only in their child seeds; the run kept is either the one with the highest
test p-value or the one with the lowest AICc.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Graph, NodePositions
from .estep import GibbsConfig, posterior_means, rank_adjust, run_chain
from .mstep import DyadDesign, FitResult, MStepConfig, select_lambda
from .twosample import RectanglePartition, TestReport, choose_k, run_test

SELECTION_MODES = ("highest-pvalue", "lowest-aicc")


@dataclass(frozen=True)
class EmConfig:
    """Loop control and restart policy.

    ``position_tol`` of None resolves to half a grid spacing of the smaller
    network, 1/(2 min(n1,n2)); below that the rank-adjusted configuration is
    effectively frozen. Because the E-step is stochastic, the position change
    also carries a Monte Carlo noise floor, so the loop additionally stops
    once the change has stalled: no relative improvement of at least
    ``stall_tol`` over its running minimum for ``stall_iters`` consecutive
    iterations.
    """

    max_em_iters: int = 25
    position_tol: float | None = None
    n_restarts: int = 10
    restart_selection: str = "highest-pvalue"
    stall_iters: int = 3
    stall_tol: float = 0.02

    def __post_init__(self):
        if self.max_em_iters < 1:
            raise ValueError("max_em_iters must be >= 1")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.position_tol is not None and self.position_tol <= 0:
            raise ValueError("position_tol must be positive")
        if self.restart_selection not in SELECTION_MODES:
            raise ValueError(f"restart_selection must be one of {SELECTION_MODES}")
        if self.stall_iters < 1 or not 0.0 <= self.stall_tol < 1.0:
            raise ValueError("need stall_iters >= 1 and stall_tol in [0,1)")

    def resolved_tol(self, n1: int, n2: int) -> float:
        if self.position_tol is not None:
            return self.position_tol
        return 1.0 / (2.0 * min(n1, n2))


@dataclass(frozen=True)
class EmIteration:
    """One row of the EM trace."""

    iteration: int
    aicc: float
    loglik: float
    lambda_: float
    df: float
    mean_position_change: tuple[float, float]
    acceptance_rates: tuple[float, float]


@dataclass
class EmResult:
    fit: FitResult
    positions: tuple[NodePositions, NodePositions]
    trace: list[EmIteration] = field(default_factory=list)


def initialize_positions(n: int, rng: np.random.Generator) -> NodePositions:
    """Uninformative start: a uniformly random permutation of the grid
    {r/(n+1)}."""
    if n < 2:
        raise ValueError("need n >= 2 nodes")
    ranks = rng.permutation(n) + 1
    return NodePositions(ranks / (n + 1.0))


def em_fit(
    graphs: tuple[Graph, Graph],
    em_config: EmConfig,
    gibbs_config: GibbsConfig,
    mstep_config: MStepConfig,
    seed,
    callback=None,
) -> EmResult:
    """Alternate M- and E-steps until the positions freeze.

    The M-step comes first, consuming the (initially random) positions; the
    adapted proposal scale of each network's sampler carries over between
    E-steps. All randomness derives from ``seed``.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_streams = ss.spawn(2)
    positions = [
        initialize_positions(g.n, np.random.default_rng(s)) for g, s in zip(graphs, init_streams)
    ]
    tol = em_config.resolved_tol(graphs[0].n, graphs[1].n)
    sigma = [gibbs_config.sigma_v, gibbs_config.sigma_v]
    theta = None
    fit = None
    trace: list[EmIteration] = []
    best_delta = np.inf
    stalled = 0

    for it in range(1, em_config.max_em_iters + 1):
        design = DyadDesign(graphs, positions, mstep_config.L)
        fit = select_lambda(graphs, positions, mstep_config, theta_init=theta, design=design)
        theta = fit.graphon.theta

        deltas, rates, new_positions = [], [], []
        for g_idx, graph in enumerate(graphs):
            chain = run_chain(
                graph,
                fit.graphon,
                replace(gibbs_config, sigma_v=sigma[g_idx]),
                np.random.default_rng(ss.spawn(1)[0]),
                init=positions[g_idx],
            )
            sigma[g_idx] = chain.sigma_v
            adjusted = rank_adjust(posterior_means(chain.samples))
            deltas.append(float(np.mean(np.abs(adjusted.u - positions[g_idx].u))))
            rates.append(chain.acceptance_rate)
            new_positions.append(adjusted)
        positions = new_positions

        record = EmIteration(
            iteration=it,
            aicc=fit.aicc,
            loglik=fit.loglik,
            lambda_=fit.lambda_,
            df=fit.df,
            mean_position_change=(deltas[0], deltas[1]),
            acceptance_rates=(rates[0], rates[1]),
        )
        trace.append(record)
        if callback is not None:
            callback(record)
        if max(deltas) < tol:
            break
        combined = 0.5 * (deltas[0] + deltas[1])
        if combined < best_delta * (1.0 - em_config.stall_tol):
            best_delta = combined
            stalled = 0
        else:
            stalled += 1
            if stalled >= em_config.stall_iters:
                break

    return EmResult(fit=fit, positions=(positions[0], positions[1]), trace=trace)


@dataclass
class RestartOutcome:
    index: int
    result: EmResult
    report: TestReport | None


@dataclass
class MultiStartResult:
    index: int
    fit: FitResult
    positions: tuple[NodePositions, NodePositions]
    trace: list[EmIteration]
    report: TestReport
    restart_aicc: list[float]
    restart_pvalues: list[float | None]


def _run_restart(args) -> RestartOutcome:
    (
        index,
        graphs,
        em_config,
        gibbs_config,
        mstep_config,
        partition,
        alpha,
        n_sims,
        em_ss,
        test_ss,
        with_test,
    ) = args
    result = em_fit(graphs, em_config, gibbs_config, mstep_config, em_ss)
    report = None
    if with_test:
        report = run_test(
            graphs,
            result.positions,
            partition,
            alpha=alpha,
            n_sims=n_sims,
            rng=np.random.default_rng(test_ss),
        )
    return RestartOutcome(index=index, result=result, report=report)


def multi_start(
    graphs: tuple[Graph, Graph],
    em_config: EmConfig,
    gibbs_config: GibbsConfig,
    mstep_config: MStepConfig,
    seed,
    partition: RectanglePartition | None = None,
    alpha: float = 0.05,
    n_sims: int = 10_000,
    workers: int = 1,
    progress=None,
) -> MultiStartResult:
    """Run ``n_restarts`` independent EM fits and keep one.

    Under highest-pvalue selection every restart is followed by the full
    test and the maximum simulated p-value wins; under lowest-aicc the
    best-fitting restart wins and only it is tested. Ties go to the lowest
    restart index, so permuting execution order cannot change the outcome.
    """
    if partition is None:
        partition = RectanglePartition.equidistant(choose_k(graphs[0].n, graphs[1].n))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    by_pvalue = em_config.restart_selection == "highest-pvalue"
    streams = [s.spawn(2) for s in ss.spawn(em_config.n_restarts)]
    jobs = [
        (
            i,
            graphs,
            em_config,
            gibbs_config,
            mstep_config,
            partition,
            alpha,
            n_sims,
            streams[i][0],
            streams[i][1],
            by_pvalue,
        )
        for i in range(em_config.n_restarts)
    ]

    outcomes: list[RestartOutcome] = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for outcome in pool.map(_run_restart, jobs):
                outcomes.append(outcome)
                if progress is not None:
                    progress(outcome)
    else:
        for job in jobs:
            outcome = _run_restart(job)
            outcomes.append(outcome)
            if progress is not None:
                progress(outcome)
    outcomes.sort(key=lambda o: o.index)

    if by_pvalue:
        best = max(outcomes, key=lambda o: (o.report.p_simulated, -o.index))
        report = best.report
    else:
        best = min(outcomes, key=lambda o: (o.result.fit.aicc, o.index))
        report = run_test(
            graphs,
            best.result.positions,
            partition,
            alpha=alpha,
            n_sims=n_sims,
            rng=np.random.default_rng(streams[best.index][1]),
        )

    return MultiStartResult(
        index=best.index,
        fit=best.result.fit,
        positions=best.result.positions,
        trace=best.result.trace,
        report=report,
        restart_aicc=[o.result.fit.aicc for o in outcomes],
        restart_pvalues=[o.report.p_simulated if o.report else None for o in outcomes],
    )
