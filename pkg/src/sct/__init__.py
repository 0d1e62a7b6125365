"""Stable combination test for global null hypotheses from dependent p-values."""

from .combine import (
    TRUNCATION,
    SctConfig,
    TestOutcome,
    bonferroni_test,
    cct_statistic,
    cct_test,
    fisher_statistic,
    fisher_test,
    normalizer,
    sct_statistic,
    sct_test,
    stouffer_statistic,
    stouffer_test,
    transform,
)
from .stable import (
    DEFAULT_POLICY,
    BracketError,
    ConvergenceError,
    EvalPolicy,
    StableNumericsError,
    StableParams,
    cdf,
    char_fn,
    pdf,
    ppf_batch,
    quantile,
    sf,
    tail_lower_approx,
    tail_upper_approx,
)

__all__ = [
    "TRUNCATION",
    "SctConfig",
    "TestOutcome",
    "bonferroni_test",
    "cct_statistic",
    "cct_test",
    "fisher_statistic",
    "fisher_test",
    "normalizer",
    "sct_statistic",
    "sct_test",
    "stouffer_statistic",
    "stouffer_test",
    "transform",
    "DEFAULT_POLICY",
    "BracketError",
    "ConvergenceError",
    "EvalPolicy",
    "StableNumericsError",
    "StableParams",
    "cdf",
    "char_fn",
    "pdf",
    "ppf_batch",
    "quantile",
    "sf",
    "tail_lower_approx",
    "tail_upper_approx",
]
