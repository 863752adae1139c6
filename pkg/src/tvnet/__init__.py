"""Estimation of time-varying network structure for binary pairwise Markov
random fields from time series of nodal states.

Three per-node estimators (kernel-smoothed, fused-lasso, and a static
baseline), min/max symmetrization into undirected graphs, BIC-based tuning,
and a synthetic benchmark protocol, all behind a small CLI.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConvergenceError,
    EmptyWindowError,
    GenerationError,
    GridSearchError,
    InvalidArgumentError,
    OutputError,
    ParseError,
    TvnetError,
    ValidationError,
)
from .ising import (
    Dataset,
    NodeParamPath,
    NodeParams,
    ThetaFull,
    cll_gradient,
    conditional_log_likelihood,
    conditional_probability,
    exact_distribution,
    exact_pairwise_moments,
    gibbs_sample,
)
from .smooth import (
    KernelSpec,
    SmoothConfig,
    estimate_node_smooth,
    estimate_node_smooth_path,
    estimate_node_static,
    kernel_weights,
    weighted_loss,
)
from .tv import (
    FusedBlockContext,
    TVConfig,
    estimate_node_tv,
    fused_subproblem,
    prox_fused,
    prox_tv1d,
    tv_objective,
    tv_penalty,
)
from .graphs import (
    GraphSequence,
    MetricsResult,
    assemble_graphs,
    constant_paths,
    evaluate,
    symmetrize,
)
from .selection import (
    BICReport,
    GridSpec,
    bandwidth_median_heuristic,
    bic_smooth,
    bic_static,
    bic_tv,
    dim_blocks,
    grid_search,
)
from .synthetic import (
    AnchorSequence,
    ExperimentReport,
    ScenarioSpec,
    generate_anchors,
    generate_dataset,
    interpolate_parameters,
    run_experiment,
    true_graphs,
)
from .io import IngestionConfig, RunManifest, emit_results, ingest
