"""Robust shrinkage scatter estimation and GLRT detector calibration."""

from ._core import (
    CovarianceModel,
    Dataset,
    FarPoint,
    FarSweepResult,
    FitDiagnostics,
    GlrtStatistic,
    RhoSweepResult,
    ScatterEstimate,
    SteeringVector,
    TheoryContext,
    TylershrinkError,
    __version__,
    build_theory_context,
    decide,
    empirical_rho_bar,
    empirical_sigma2,
    empirical_sigma2_at_one,
    glrt_statistic,
    identity_model,
    ks_distance_vs_rayleigh,
    model_from_matrix,
    rayleigh_tail,
    rho_bar,
    robust_shrinkage_fit,
    robust_shrinkage_fit_samples,
    run_far_sweep,
    sample_covariance,
    sample_dataset,
    select_rho_star,
    solve_gamma,
    solve_stieltjes,
    steering_from_vector,
    theoretical_sigma2,
    toeplitz_ar_model,
    uniform_steering,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
