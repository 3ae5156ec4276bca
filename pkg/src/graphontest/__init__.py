"""Joint smooth-graphon modeling of two networks and a nonparametric test of
structural equivalence, with simulation utilities and difference
localization."""

__version__ = "0.1.0"

from .core import (
    Graph,
    GridGraphon,
    NodePositions,
    SplineGraphon,
    graphon_eval,
    graphon_mean,
    spline_basis,
    tensor_basis,
)
from .em import EmConfig, EmResult, em_fit, initialize_positions, multi_start
from .estep import GibbsConfig, posterior_means, rank_adjust, run_chain
from .microdiff import DiffSurface, edge_contribution, fit_difference, node_impact, separate_mstep, w_diff
from .mstep import (
    FitResult,
    MStepConfig,
    constrained_fisher_scoring,
    default_basis_size,
    select_lambda,
)
from .simulate import (
    SimConfig,
    sample_graph,
    sample_positions,
    shrink_alternative,
    simulate,
    three_group_graphon,
)
from .twosample import (
    RectanglePartition,
    TestReport,
    choose_k,
    rectangle_counts,
    run_test,
    test_statistic,
)

__all__ = [
    "__version__",
    "Graph",
    "GridGraphon",
    "NodePositions",
    "SplineGraphon",
    "graphon_eval",
    "graphon_mean",
    "spline_basis",
    "tensor_basis",
    "EmConfig",
    "EmResult",
    "em_fit",
    "initialize_positions",
    "multi_start",
    "GibbsConfig",
    "posterior_means",
    "rank_adjust",
    "run_chain",
    "DiffSurface",
    "edge_contribution",
    "fit_difference",
    "node_impact",
    "separate_mstep",
    "w_diff",
    "FitResult",
    "MStepConfig",
    "constrained_fisher_scoring",
    "default_basis_size",
    "select_lambda",
    "SimConfig",
    "sample_graph",
    "sample_positions",
    "shrink_alternative",
    "simulate",
    "three_group_graphon",
    "RectanglePartition",
    "TestReport",
    "choose_k",
    "rectangle_counts",
    "run_test",
    "test_statistic",
]
