"""Spectral redundancy diagnostics for benchmark score matrices."""

from .association import (
    ClusterGrouping,
    CorrMatrix,
    RedundancyFlags,
    correlation_ci,
    hierarchical_cluster,
    mean_pairwise_hamming,
    pairwise_correlation,
    partial_correlation,
    redundancy_flags,
    stratified_correlation,
    tetrachoric,
    tetrachoric_ed,
)
from .composite import (
    FragilityReport,
    SuiteScores,
    best_subset_search,
    ceiling_oracle,
    composite_ceiling,
    composite_ranking,
    dirichlet_fragility,
    information_density,
    kendall_tau,
    leave_one_out,
    load_suite,
    suite_ed,
)
from .matrix_io import (
    BinarizationPolicy,
    ModelMeta,
    ScoreMatrix,
    binarize,
    drop_degenerate_tasks,
    impute_missing,
    load_matrix,
    load_metadata,
    save_matrix,
    score_matrix,
)
from .nulls import (
    EdReport,
    NullSpectrumBand,
    alternative_estimators,
    bootstrap_ed_ci,
    build_ed_report,
    matched_dimension_ed,
    mp_null_ed,
    pc_metadata_auc,
    permutation_null,
    significant_pcs,
    split_half_reliability,
)
from .selection import (
    CompressionCurve,
    SelectionResult,
    baseline_select,
    compression_curve,
    ed_greedy,
    prospective_split_eval,
    ranking_fidelity,
    submodularity_probe,
)
from .spectral import (
    PcDecomposition,
    Spectrum,
    center,
    ed_of_correlation,
    ed_of_matrix,
    effective_dimensionality,
    participation_ratio,
    pc1_fraction,
    principal_components,
    renyi2_ed,
    shannon_effective_rank,
    singular_spectrum,
)
from .synthetic import (
    IrtSpec,
    RankRecoveryReport,
    gen_iid_matrix,
    gen_irt_matrix,
    rank_recovery_report,
)
from .temporal import (
    CohortComparison,
    EdSeries,
    MannKendall,
    SaturationFit,
    cohort_bootstrap_compare,
    diversity_insertion_probe,
    ed_vs_model_count,
    fixed_variance_subset,
    mann_kendall,
    saturation_fit,
    sliding_window_ed,
    temporal_information_density,
)

__version__ = "0.1.0"
