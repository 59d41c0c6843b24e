"""Sparse linear discriminant analysis.

An l1-penalized least-squares formulation of two-class LDA, its
population and oracle closed forms, exhaustive-search support decoding,
information-theoretic recovery limits, and a reproducible simulation
harness for support-recovery phase transitions.
"""

from .backend import backend_name
from .decoder import (
    DecoderResult,
    GapTerms,
    SeparationReport,
    exhaustive_decode,
    gamma_rate,
    gap_terms,
    separation_check,
    separation_margin,
    subset_score,
)
from .exceptions import ConvergenceError, DataFormatError, NumericError, SingularMatrixError
from .harness import (
    DEFAULT_THETA_GRID,
    ExperimentConfig,
    ExperimentRow,
    ExperimentTable,
    hamming,
    replication_seed,
    run_correlation_sweep,
    run_phase_transition,
    sample_size_of,
    sparsity_of,
)
from .model import (
    CovarianceSpec,
    Dataset,
    GaussianLdaModel,
    dataset_from_csv,
    dataset_to_csv,
    discriminant_direction,
    make_covariance,
    make_model,
    sample_dataset,
    sigma_conditional,
)
from .optim import (
    QuadraticProgram,
    SolveReport,
    chol_factor,
    kkt_residual,
    lasso_quadratic,
    objective,
    require_converged,
    solve_spd,
)
from .risk import (
    Classifier,
    bayes_classifier,
    bayes_risk,
    classify,
    conditional_error_rate,
    normal_cdf,
)
from .sda import (
    KktReport,
    PopulationSolution,
    SdaFit,
    encode_labels,
    fit_path,
    fit_sda,
    gram_program,
    kkt_certify,
    lambda_max,
    lambda_path,
    oracle_fit,
    population_program,
    population_solution,
    recode_equivalence,
    scatter_coefficient,
)
from .theory import (
    PopulationConditions,
    TheoryReport,
    beta_min_threshold,
    conditional_variances,
    irrepresentable,
    lambda0,
    lambda_of,
    lambda_sda,
    phi_close,
    phi_far,
    population_conditions,
    sufficient_n,
    tau_min,
    theory_report,
)

__all__ = [
    "backend_name",
    "ConvergenceError",
    "DataFormatError",
    "NumericError",
    "SingularMatrixError",
    "CovarianceSpec",
    "Dataset",
    "GaussianLdaModel",
    "dataset_from_csv",
    "dataset_to_csv",
    "discriminant_direction",
    "make_covariance",
    "make_model",
    "sample_dataset",
    "sigma_conditional",
    "QuadraticProgram",
    "SolveReport",
    "chol_factor",
    "kkt_residual",
    "lasso_quadratic",
    "objective",
    "require_converged",
    "solve_spd",
    "KktReport",
    "PopulationSolution",
    "SdaFit",
    "encode_labels",
    "fit_path",
    "fit_sda",
    "gram_program",
    "kkt_certify",
    "lambda_max",
    "lambda_path",
    "oracle_fit",
    "population_program",
    "population_solution",
    "recode_equivalence",
    "scatter_coefficient",
    "PopulationConditions",
    "TheoryReport",
    "beta_min_threshold",
    "conditional_variances",
    "irrepresentable",
    "lambda0",
    "lambda_of",
    "lambda_sda",
    "phi_close",
    "phi_far",
    "population_conditions",
    "sufficient_n",
    "tau_min",
    "theory_report",
    "DecoderResult",
    "GapTerms",
    "SeparationReport",
    "exhaustive_decode",
    "gamma_rate",
    "gap_terms",
    "separation_check",
    "separation_margin",
    "subset_score",
    "DEFAULT_THETA_GRID",
    "ExperimentConfig",
    "ExperimentRow",
    "ExperimentTable",
    "hamming",
    "replication_seed",
    "run_correlation_sweep",
    "run_phase_transition",
    "sample_size_of",
    "sparsity_of",
]
__version__ = "0.1.0"
