"""Exposure effects (risk differences) and additive interaction from a
logistic model, with Monte Carlo interval estimation."""

from ._core import (  # noqa: F401
    Cohort,
    ConfidenceEllipse,
    EffectDistribution,
    Error,
    FitResult,
    ModelSpec,
    StandardizationSet,
    __version__,
    build_design,
    chi2_upper_tail,
    cholesky,
    confidence_ellipse,
    delta_method_check,
    describe,
    effect_distribution,
    effect_triple,
    fit_cohort,
    fit_logistic,
    load_cohort,
    load_fit,
    lr_test,
    marginal_report,
    marginal_risk,
    parse_cohort_csv,
    percentile_ci,
    quantile,
    report,
    risk,
    sample_parameters,
    tercile_report,
)
