"""Diffusion LMS-family adaptive filtering over sensor networks.

The package simulates distributed parameter estimation: a network of nodes
observes a common unknown system through local regressors and noisy
measurements (optionally with impulsive interference) and runs synchronous
adapt-then-combine diffusion filters.  Alongside the classic diffusion LMS
and sign-error LMS baselines it provides a probabilistic LMS variant whose
per-node step size anneals with a tracked belief variance, plus tools for
mean-stability analysis and Monte Carlo MSD studies.
"""

__version__ = "0.1.0"

from .analysis import (
    MeanRecursionModel,
    MsdCurve,
    mean_error_matrix,
    msd,
    spectral_radius,
    stability_bound,
)
from .filters import (
    DLMS,
    DPLMS,
    DSE_LMS,
    NodeFilterState,
    OpCount,
    OpCounter,
    diffusion_combine,
    dlms_adapt,
    dplms_adapt,
    dse_lms_adapt,
    initial_states,
    op_counts,
    plms_alpha,
    plms_step,
    plms_variance_update,
    run_network_iteration,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunResult,
    build_topology,
    config_from_dict,
    emit_csv,
    generate_run_data,
    load_config,
    pilot_alpha,
    realize_models,
    run_experiment,
)
from .network import (
    CombinationMatrix,
    NetworkTopology,
    TopologyGenerationError,
    gen_geometric_topology,
    gen_random_topology,
    uniform_combination,
)
from .signals import (
    NoiseModel,
    RegressorProfile,
    UnknownSystem,
    gen_regressor,
    gen_unknown_system,
    measure,
    random_walk_step,
    sample_noise,
)

__all__ = [
    "CombinationMatrix",
    "ConfigError",
    "DLMS",
    "DPLMS",
    "DSE_LMS",
    "ExperimentConfig",
    "MeanRecursionModel",
    "MsdCurve",
    "NetworkTopology",
    "NodeFilterState",
    "NoiseModel",
    "OpCount",
    "OpCounter",
    "RegressorProfile",
    "RunResult",
    "TopologyGenerationError",
    "UnknownSystem",
    "build_topology",
    "config_from_dict",
    "diffusion_combine",
    "generate_run_data",
    "dlms_adapt",
    "dplms_adapt",
    "dse_lms_adapt",
    "emit_csv",
    "gen_geometric_topology",
    "gen_random_topology",
    "gen_regressor",
    "gen_unknown_system",
    "initial_states",
    "load_config",
    "mean_error_matrix",
    "measure",
    "msd",
    "op_counts",
    "pilot_alpha",
    "plms_alpha",
    "plms_step",
    "plms_variance_update",
    "random_walk_step",
    "realize_models",
    "run_experiment",
    "run_network_iteration",
    "sample_noise",
    "spectral_radius",
    "stability_bound",
    "uniform_combination",
]
