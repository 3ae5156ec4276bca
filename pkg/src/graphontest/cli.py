"""Command-line frontend: simulate | compare | replicate.

All randomness of a command flows from the single --seed, so identical
configurations write identical artifacts. Data goes to files in --out-dir;
logging (including wall-clock timings) goes to standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .core import Graph, NodePositions, graphon_eval
from .em import EmConfig, multi_start
from .errors import InputError
from .estep import GibbsConfig
from .ingest import parse_adjacency, parse_edge_list, write_edge_list
from .microdiff import dyad_contributions, fit_difference, node_impact
from .mstep import MStepConfig, default_basis_size, default_lambda_grid
from .simulate import child_rngs, sample_graph, sample_positions, shrink_alternative, three_group_graphon
from .twosample import RectanglePartition, TestReport, choose_k, run_test

logger = logging.getLogger("graphontest")

REPORT_VERSION = "1"
STUDIES = ("null-oracle", "null-estimated", "power-oracle")


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation."""

    command: str
    net_a: str | None = None
    net_b: str | None = None
    format: str = "edges"
    threshold: float | None = None
    k: int | None = None  # None = auto
    alpha: float = 0.05
    n_sims: int = 10_000
    restarts: int = 10
    select: str = "pvalue"
    seed: int = 0
    workers: int = 1
    out_dir: str = "."
    with_diff: bool = False
    exit_on_reject: bool = False
    # simulate
    n_a: int = 200
    n_b: int = 300
    gamma: float = 0.0
    # replicate
    study: str | None = None
    reps: int = 400
    gamma_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    # estimation overrides
    basis_size: int | None = None
    burn_in: int = 50
    thinning: int = 5
    n_keep: int = 30
    sigma_v: float = 1.0
    max_em_iters: int = 25
    position_tol: float | None = None
    diff_top_q: int = 200
    grid: int = 101

    def echo(self) -> dict:
        out = {}
        for key, value in vars(self).items():
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out


def _selection_mode(select: str) -> str:
    return {"pvalue": "highest-pvalue", "aicc": "lowest-aicc"}[select]


def load_graph(path: str, fmt: str, threshold: float | None) -> Graph:
    if fmt == "edges":
        return parse_edge_list(path)
    if fmt == "adjacency":
        return parse_adjacency(path, threshold=threshold)
    raise InputError(f"unknown input format {fmt!r}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _positions_rows(graph: Graph, positions: NodePositions):
    labels = graph.labels or tuple(f"v{i + 1}" for i in range(graph.n))
    return [(i + 1, labels[i], repr(float(u))) for i, u in enumerate(positions.u)]


def _surface_rows(fn, grid: int):
    axis = np.linspace(0.0, 1.0, grid)
    rows = []
    for u in axis:
        vals = fn(np.full(grid, u), axis)
        rows.extend((repr(float(u)), repr(float(v)), repr(float(w))) for v, w in zip(axis, vals))
    return rows


def _test_payload(report: TestReport) -> dict:
    return {
        "t": report.t,
        "df": report.df,
        "cells_used": report.cells_used,
        "alpha": report.alpha,
        "n_sims": report.n_sims,
        "p_asym": report.p_asymptotic,
        "p_sim": report.p_simulated,
        "crit_asym": report.crit_asymptotic,
        "crit_sim": report.crit_simulated,
        "reject_asym": report.reject_asymptotic,
        "reject_sim": report.reject_simulated,
        "contributions": report.cell_records(),
    }


def _diff_outputs(config: RunConfig, graphs, positions, mstep_config, out: Path) -> dict:
    surface = fit_difference(graphs, positions, mstep_config)
    payload: dict = {"fits": {}, "edges": {}, "node_impact": {}}
    for net_idx, key in ((1, "a"), (2, "b")):
        graph = graphs[net_idx - 1]
        pos = positions[net_idx - 1]
        labels = graph.labels or tuple(f"v{i + 1}" for i in range(graph.n))
        ii, jj, present, contrib = dyad_contributions(graph, net_idx, pos, surface)
        edges = {}
        for kind in ("present", "absent"):
            mask = present if kind == "present" else ~present
            order = np.argsort(-contrib[mask], kind="stable")[: config.diff_top_q]
            sel_i, sel_j, sel_c = ii[mask][order], jj[mask][order], contrib[mask][order]
            edges[kind] = [
                {
                    "i": int(a) + 1,
                    "j": int(b) + 1,
                    "label_i": labels[a],
                    "label_j": labels[b],
                    "contrib": float(c),
                }
                for a, b, c in zip(sel_i, sel_j, sel_c)
                if c > 0.0
            ]
        payload["edges"][key] = edges
        payload["node_impact"][key] = [float(x) for x in node_impact(graph, net_idx, pos, surface)]
        fit = surface.fit_a if net_idx == 1 else surface.fit_b
        payload["fits"][key] = {"L": fit.L, "theta": [float(x) for x in fit.theta]}

    for first, name in ((1, "a_over_b"), (2, "b_over_a")):
        rows = _surface_rows(lambda uu, vv: surface.value(first, uu, vv), config.grid)
        _write_csv(out / f"diff_surface_{name}.csv", ["u", "v", "value"], rows)
    payload["surface_files"] = ["diff_surface_a_over_b.csv", "diff_surface_b_over_a.csv"]
    return payload


def cmd_compare(config: RunConfig) -> int:
    """Full pipeline: ingest, multi-restart EM fit, test, optional diff."""
    t0 = time.perf_counter()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph_a = load_graph(config.net_a, config.format, config.threshold)
    graph_b = load_graph(config.net_b, config.format, config.threshold)
    graphs = (graph_a, graph_b)
    logger.info("loaded networks: n=%d and n=%d", graph_a.n, graph_b.n)

    k = config.k if config.k is not None else choose_k(graph_a.n, graph_b.n)
    partition = RectanglePartition.equidistant(k)
    L = config.basis_size if config.basis_size is not None else default_basis_size(graph_a.n, graph_b.n)
    mstep_config = MStepConfig(L=L, lambda_grid=default_lambda_grid())
    gibbs_config = GibbsConfig(
        sigma_v=config.sigma_v, burn_in=config.burn_in, thinning=config.thinning, n_keep=config.n_keep
    )
    em_config = EmConfig(
        max_em_iters=config.max_em_iters,
        position_tol=config.position_tol,
        n_restarts=config.restarts,
        restart_selection=_selection_mode(config.select),
    )

    result = multi_start(
        graphs,
        em_config,
        gibbs_config,
        mstep_config,
        seed=config.seed,
        partition=partition,
        alpha=config.alpha,
        n_sims=config.n_sims,
        workers=config.workers,
        progress=lambda o: logger.info(
            "restart %d: aicc=%.2f%s",
            o.index + 1,
            o.result.fit.aicc,
            "" if o.report is None else f", p_sim={o.report.p_simulated:.4f}",
        ),
    )
    logger.info("selected restart %d (t=%.2f, p_sim=%.4f)", result.index + 1, result.report.t, result.report.p_simulated)

    payload = {
        "version": REPORT_VERSION,
        "package_version": __version__,
        "config": config.echo(),
        "fit": {
            "L": result.fit.graphon.L,
            "lambda": result.fit.lambda_,
            "df": result.fit.df,
            "aicc": result.fit.aicc,
            "loglik": result.fit.loglik,
            "theta": [float(x) for x in result.fit.graphon.theta],
        },
        "positions": {
            "a": [float(x) for x in result.positions[0].u],
            "b": [float(x) for x in result.positions[1].u],
        },
        "trace": [
            {
                "iteration": rec.iteration,
                "aicc": rec.aicc,
                "loglik": rec.loglik,
                "lambda": rec.lambda_,
                "df": rec.df,
                "mean_position_change": list(rec.mean_position_change),
                "acceptance_rates": list(rec.acceptance_rates),
            }
            for rec in result.trace
        ],
        "restarts": {
            "selected": result.index,
            "aicc": result.restart_aicc,
            "p_sim": result.restart_pvalues,
        },
        "test": _test_payload(result.report),
    }

    if config.with_diff:
        payload["diff"] = _diff_outputs(config, graphs, result.positions, mstep_config, out)

    _write_csv(out / "positions_a.csv", ["node", "label", "u"], _positions_rows(graph_a, result.positions[0]))
    _write_csv(out / "positions_b.csv", ["node", "label", "u"], _positions_rows(graph_b, result.positions[1]))
    _write_csv(
        out / "graphon_surface.csv",
        ["u", "v", "value"],
        _surface_rows(lambda uu, vv: graphon_eval(result.fit.graphon, uu, vv), config.grid),
    )
    _write_csv(
        out / "cell_contributions.csv",
        ["k", "l", "d1", "d2", "m1", "m2", "E1", "V1", "used", "contrib"],
        [
            (r["k"], r["l"], r["d1"], r["d2"], r["m1"], r["m2"], repr(r["E1"]), repr(r["V1"]), int(r["used"]), repr(r["contrib"]))
            for r in result.report.cell_records()
        ],
    )
    _write_json(out / "report.json", payload)
    logger.info("compare finished in %.1f s; report in %s", time.perf_counter() - t0, out / "report.json")

    if config.exit_on_reject and result.report.reject_simulated:
        return 2
    return 0


def cmd_simulate(config: RunConfig) -> int:
    """Write a simulated network pair plus its ground-truth positions."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = three_group_graphon()
    alt = shrink_alternative(truth, config.gamma)
    rng_a_pos, rng_a_net, rng_b_pos, rng_b_net = child_rngs(config.seed, 4)
    pos_a = sample_positions(config.n_a, rng_a_pos)
    pos_b = sample_positions(config.n_b, rng_b_pos)
    net_a = sample_graph(truth, pos_a, rng_a_net)
    net_b = sample_graph(alt, pos_b, rng_b_net)

    write_edge_list(net_a, out / "net_a.edges")
    write_edge_list(net_b, out / "net_b.edges")
    _write_csv(out / "positions_a.csv", ["node", "label", "u"], _positions_rows(net_a, pos_a))
    _write_csv(out / "positions_b.csv", ["node", "label", "u"], _positions_rows(net_b, pos_b))
    _write_json(
        out / "simulation.json",
        {
            "version": REPORT_VERSION,
            "package_version": __version__,
            "config": config.echo(),
            "densities": {"a": net_a.density(), "b": net_b.density()},
        },
    )
    logger.info("simulated pair written to %s (densities %.3f / %.3f)", out, net_a.density(), net_b.density())
    return 0


def _oracle_replicate(args) -> dict:
    rep, gamma, n_a, n_b, k, alpha, n_sims, stream = args
    truth = three_group_graphon()
    alt = truth if gamma == 0.0 else shrink_alternative(truth, gamma)
    rng_pa, rng_na, rng_pb, rng_nb, rng_test = [np.random.default_rng(s) for s in stream.spawn(5)]
    pos_a = sample_positions(n_a, rng_pa)
    pos_b = sample_positions(n_b, rng_pb)
    net_a = sample_graph(truth, pos_a, rng_na)
    net_b = sample_graph(alt, pos_b, rng_nb)
    partition = RectanglePartition.equidistant(k)
    report = run_test((net_a, net_b), (pos_a, pos_b), partition, alpha=alpha, n_sims=n_sims, rng=rng_test)
    return _replicate_row(rep, gamma, report)


def _estimated_replicate(args) -> dict:
    rep, n_a, n_b, k, alpha, n_sims, stream, em_config, gibbs_config, basis_size = args
    truth = three_group_graphon()
    sim_ss, em_ss = stream.spawn(2)
    rng_pa, rng_na, rng_pb, rng_nb = [np.random.default_rng(s) for s in sim_ss.spawn(4)]
    net_a = sample_graph(truth, sample_positions(n_a, rng_pa), rng_na)
    net_b = sample_graph(truth, sample_positions(n_b, rng_pb), rng_nb)
    L = basis_size if basis_size is not None else default_basis_size(n_a, n_b)
    result = multi_start(
        (net_a, net_b),
        em_config,
        gibbs_config,
        MStepConfig(L=L),
        seed=em_ss,
        partition=RectanglePartition.equidistant(k),
        alpha=alpha,
        n_sims=n_sims,
        workers=1,
    )
    return _replicate_row(rep, None, result.report)


def _replicate_row(rep: int, gamma, report: TestReport) -> dict:
    return {
        "rep": rep,
        "gamma": gamma,
        "t": report.t,
        "cells_used": report.cells_used,
        "p_asym": report.p_asymptotic,
        "p_sim": report.p_simulated,
        "reject_asym": int(report.reject_asymptotic),
        "reject_sim": int(report.reject_simulated),
    }


def _run_jobs(jobs, worker, workers: int):
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            total = len(jobs)
            done = 0
            for row in pool.map(worker, jobs, chunksize=max(1, len(jobs) // (8 * workers))):
                done += 1
                if done % max(1, total // 10) == 0:
                    logger.info("replicates: %d/%d", done, total)
                yield row
    else:
        for i, job in enumerate(jobs, start=1):
            if i % max(1, len(jobs) // 10) == 0:
                logger.info("replicates: %d/%d", i, len(jobs))
            yield worker(job)


def cmd_replicate(config: RunConfig) -> int:
    """Run a named simulation study and write per-replicate and summary
    tables."""
    if config.study not in STUDIES:
        raise InputError(f"unknown study {config.study!r}; pick one of {STUDIES}")
    t0 = time.perf_counter()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = config.k if config.k is not None else choose_k(config.n_a, config.n_b)
    ss = np.random.SeedSequence(config.seed)

    if config.study == "power-oracle":
        gammas = list(config.gamma_grid)
    else:
        gammas = [0.0]

    rows: list[dict] = []
    if config.study == "null-estimated":
        em_config = EmConfig(
            max_em_iters=config.max_em_iters,
            position_tol=config.position_tol,
            n_restarts=config.restarts,
            restart_selection=_selection_mode(config.select),
        )
        gibbs_config = GibbsConfig(
            sigma_v=config.sigma_v, burn_in=config.burn_in, thinning=config.thinning, n_keep=config.n_keep
        )
        streams = ss.spawn(config.reps)
        jobs = [
            (rep, config.n_a, config.n_b, k, config.alpha, config.n_sims, streams[rep], em_config, gibbs_config, config.basis_size)
            for rep in range(config.reps)
        ]
        rows.extend(_run_jobs(jobs, _estimated_replicate, config.workers))
    else:
        streams = ss.spawn(config.reps * len(gammas))
        jobs = []
        idx = 0
        for gamma in gammas:
            for rep in range(config.reps):
                jobs.append((rep, gamma, config.n_a, config.n_b, k, config.alpha, config.n_sims, streams[idx]))
                idx += 1
        rows.extend(_run_jobs(jobs, _oracle_replicate, config.workers))

    _write_csv(
        out / "pvalues.csv",
        ["rep", "gamma", "t", "cells_used", "p_asym", "p_sim", "reject_asym", "reject_sim"],
        [
            (
                r["rep"],
                "" if r["gamma"] is None else repr(float(r["gamma"])),
                repr(r["t"]),
                r["cells_used"],
                repr(r["p_asym"]),
                repr(r["p_sim"]),
                r["reject_asym"],
                r["reject_sim"],
            )
            for r in rows
        ],
    )

    summary_rows = []
    for gamma in gammas if config.study == "power-oracle" else [None]:
        grp = [r for r in rows if r["gamma"] == gamma] if gamma is not None else rows
        n = len(grp)
        summary_rows.append(
            (
                "" if gamma is None else repr(float(gamma)),
                n,
                repr(sum(r["reject_sim"] for r in grp) / n),
                repr(sum(r["reject_asym"] for r in grp) / n),
                repr(float(np.mean([r["p_sim"] for r in grp]))),
            )
        )
    _write_csv(
        out / "summary.csv",
        ["gamma", "reps", "reject_rate_sim", "reject_rate_asym", "mean_p_sim"],
        summary_rows,
    )
    _write_json(
        out / "study.json",
        {"version": REPORT_VERSION, "package_version": __version__, "config": config.echo(), "study": config.study},
    )
    logger.info("study %s finished in %.1f s", config.study, time.perf_counter() - t0)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1; 2 is reserved for rejections
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _k_value(text: str):
    if text == "auto":
        return None
    return int(text)


def _build_parser() -> _Parser:
    parser = _Parser(prog="graphontest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key-value JSON file; flags win over it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None, help="parallel workers (default: all cores)")
        p.add_argument("--out-dir", default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--n-sims", type=int, default=None)
        p.add_argument("--k", type=_k_value, default=None, help="cells per axis, or 'auto'")
        p.add_argument("--verbose", action="store_true")

    compare = sub.add_parser("compare", help="fit the joint model and test structural equivalence")
    common(compare)
    compare.add_argument("--net-a", default=None, required=False)
    compare.add_argument("--net-b", default=None, required=False)
    compare.add_argument("--format", choices=("edges", "adjacency"), default=None)
    compare.add_argument("--threshold", type=float, default=None, help="binarize weighted adjacency at this value (strict >)")
    compare.add_argument("--restarts", type=int, default=None)
    compare.add_argument("--select", choices=("pvalue", "aicc"), default=None)
    compare.add_argument("--with-diff", action="store_true")
    compare.add_argument("--exit-on-reject", action="store_true")
    compare.add_argument("--basis-size", type=int, default=None)
    compare.add_argument("--burn-in", type=int, default=None)
    compare.add_argument("--thinning", type=int, default=None)
    compare.add_argument("--n-keep", type=int, default=None)
    compare.add_argument("--sigma-v", type=float, default=None)
    compare.add_argument("--max-em-iters", type=int, default=None)
    compare.add_argument("--position-tol", type=float, default=None)
    compare.add_argument("--diff-top-q", type=int, default=None)
    compare.add_argument("--grid", type=int, default=None)

    simulate = sub.add_parser("simulate", help="write a simulated network pair")
    common(simulate)
    simulate.add_argument("--n-a", type=int, default=None)
    simulate.add_argument("--n-b", type=int, default=None)
    simulate.add_argument("--gamma", type=float, default=None, help="shrink network B toward constant density")

    replicate = sub.add_parser("replicate", help="run a named simulation study")
    common(replicate)
    replicate.add_argument("--study", choices=STUDIES, default=None)
    replicate.add_argument("--reps", type=int, default=None)
    replicate.add_argument("--n-a", type=int, default=None)
    replicate.add_argument("--n-b", type=int, default=None)
    replicate.add_argument("--gamma-grid", default=None, help="comma-separated mixing weights for power-oracle")
    replicate.add_argument("--restarts", type=int, default=None)
    replicate.add_argument("--select", choices=("pvalue", "aicc"), default=None)
    replicate.add_argument("--basis-size", type=int, default=None)
    replicate.add_argument("--burn-in", type=int, default=None)
    replicate.add_argument("--thinning", type=int, default=None)
    replicate.add_argument("--n-keep", type=int, default=None)
    replicate.add_argument("--sigma-v", type=float, default=None)
    replicate.add_argument("--max-em-iters", type=int, default=None)
    replicate.add_argument("--position-tol", type=float, default=None)

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge precedence: command-line flags > config file > defaults."""
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise InputError(f"{args.config}: config file must hold a flat JSON object")

    config = RunConfig(command=args.command)
    for key in vars(config):
        if key == "command":
            continue
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            value = flag
        elif key in file_values:
            value = file_values[key]
        else:
            continue
        if key == "gamma_grid" and isinstance(value, str):
            value = tuple(float(tok) for tok in value.split(","))
        elif key == "gamma_grid":
            value = tuple(float(x) for x in value)
        setattr(config, key, value)

    if getattr(args, "workers", None) is None and "workers" not in file_values:
        config.workers = max(1, os.cpu_count() or 1)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        config = resolve_config(args)
        if args.command == "compare":
            if not config.net_a or not config.net_b:
                raise InputError("compare needs --net-a and --net-b")
            return cmd_compare(config)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "replicate":
            if not config.study:
                raise InputError("replicate needs --study")
            return cmd_replicate(config)
        raise InputError(f"unknown command {args.command!r}")
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
