"""Stochastic Liouville-von Neumann trajectories, the hierarchical master
equation obtained by averaging them analytically, and reference solvers."""

from .bath import (
    BathSpectrum,
    CorrelationKernel,
    build_kernels,
    correlation_function,
    discretize_spectral_density,
    exponential_kernel,
    kernels_from_functions,
    thermal_occupation,
)
from .exceptions import ConfigurationError
from .hierarchy import (
    HierarchyConfig,
    TermWeights,
    appendix_consistency_check,
    class1_rhs,
    class2_rhs,
    member_count,
    tractability_report,
)
from .hierarchy import solve as solve_hierarchy
from .liouville import (
    SystemModel,
    anticommutator_superop,
    apply_superop,
    commutator_superop,
    family_superop,
    flatten,
    rotate_coupling,
    unflatten,
)
from .noise import (
    CrossFactors,
    NoiseAmplitudes,
    NoisePath,
    StatisticsReport,
    cross_factors,
    evaluate_noise,
    make_path,
    sample_amplitudes,
    validate_statistics,
    validate_statistics_seeded,
)
from .reference import (
    OracleConfig,
    dephasing_decay,
    exact_oracle,
    solve_convolved,
    solve_lindblad,
    solve_tcl2,
)
from .series import DensityMatrixSeries
from .sln import EnsembleStats, Trajectory, ensemble_average, integrate_density, integrate_pair

__all__ = [
    "BathSpectrum",
    "ConfigurationError",
    "CorrelationKernel",
    "CrossFactors",
    "DensityMatrixSeries",
    "EnsembleStats",
    "HierarchyConfig",
    "NoiseAmplitudes",
    "NoisePath",
    "OracleConfig",
    "StatisticsReport",
    "SystemModel",
    "TermWeights",
    "Trajectory",
    "anticommutator_superop",
    "appendix_consistency_check",
    "apply_superop",
    "build_kernels",
    "class1_rhs",
    "class2_rhs",
    "commutator_superop",
    "correlation_function",
    "cross_factors",
    "dephasing_decay",
    "discretize_spectral_density",
    "ensemble_average",
    "evaluate_noise",
    "exact_oracle",
    "exponential_kernel",
    "family_superop",
    "flatten",
    "integrate_density",
    "integrate_pair",
    "kernels_from_functions",
    "make_path",
    "member_count",
    "rotate_coupling",
    "sample_amplitudes",
    "solve_convolved",
    "solve_hierarchy",
    "solve_lindblad",
    "solve_tcl2",
    "thermal_occupation",
    "tractability_report",
    "unflatten",
    "validate_statistics",
    "validate_statistics_seeded",
]

__version__ = "0.1.0"
