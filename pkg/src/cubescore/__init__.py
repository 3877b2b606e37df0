"""Scores, permanents, constructions, and structure analysis for matrices
that nearly map the sign hypercube ``{-1,+1}^n`` onto itself."""

from .core import (
    ENUMERATION_CAP,
    AnalysisParams,
    CapacityError,
    CubescoreError,
    DegenerateGeneratorsError,
    InternalCheckError,
    ParseError,
    PreconditionError,
    ShapeError,
    SignVector,
    ToleranceConfig,
    DEFAULT_TOLERANCES,
    gray_enumerate,
    is_column_stochastic,
    is_orthogonal,
    load_matrix,
    numeric_rank,
    save_matrix,
)
from .score import (
    ScoreReport,
    ThresholdScoreReport,
    exact_hit_indices,
    exact_score,
    mc_score,
    naive_exact_score,
    naive_hit_indices,
    product_statistic,
    threshold_score,
)
from .permanent import (
    PermanentReport,
    balls_in_bins_estimate,
    bernoulli_permanent,
    naive_permanent,
    naive_value,
    ryser_permanent,
    ryser_value,
)
from .constructors import (
    ConstructionCertificate,
    GapDescriptor,
    gap_membership,
    gap_perturbed_selector,
    perm_reflection,
    rank_one_orthogonal,
    rank_r_orthogonal,
    selector_matrix,
)
from .structure import (
    ConcentrationReport,
    DecompositionReport,
    DominanceReport,
    HammingCheck,
    ProcrustesReport,
    RankStructureReport,
    RowClass,
    SparseSignMatrix,
    StochasticReport,
    TraceBoundReport,
    classify_row,
    collision_probability_bounds,
    concentration_probability,
    decompose,
    dominance_analysis,
    hamming_check,
    procrustes_fit,
    stochastic_certificate,
    trace_bound_check,
    verify_rank_r_structure,
)

__version__ = "0.1.0"

__all__ = [
    "ENUMERATION_CAP",
    "AnalysisParams",
    "CapacityError",
    "CubescoreError",
    "DegenerateGeneratorsError",
    "InternalCheckError",
    "ParseError",
    "PreconditionError",
    "ShapeError",
    "SignVector",
    "ToleranceConfig",
    "DEFAULT_TOLERANCES",
    "gray_enumerate",
    "is_column_stochastic",
    "is_orthogonal",
    "load_matrix",
    "numeric_rank",
    "save_matrix",
    "ScoreReport",
    "ThresholdScoreReport",
    "exact_hit_indices",
    "exact_score",
    "mc_score",
    "naive_exact_score",
    "naive_hit_indices",
    "product_statistic",
    "threshold_score",
    "PermanentReport",
    "balls_in_bins_estimate",
    "bernoulli_permanent",
    "naive_permanent",
    "naive_value",
    "ryser_permanent",
    "ryser_value",
    "ConstructionCertificate",
    "GapDescriptor",
    "gap_membership",
    "gap_perturbed_selector",
    "perm_reflection",
    "rank_one_orthogonal",
    "rank_r_orthogonal",
    "selector_matrix",
    "ConcentrationReport",
    "DecompositionReport",
    "DominanceReport",
    "HammingCheck",
    "ProcrustesReport",
    "RankStructureReport",
    "RowClass",
    "SparseSignMatrix",
    "StochasticReport",
    "TraceBoundReport",
    "classify_row",
    "collision_probability_bounds",
    "concentration_probability",
    "decompose",
    "dominance_analysis",
    "hamming_check",
    "procrustes_fit",
    "stochastic_certificate",
    "trace_bound_check",
    "verify_rank_r_structure",
    "__version__",
]
