"""Stable combination test and baseline p-value combination rules.

Each p-value is mapped to an upper quantile of a standardized stable law,
``W_i = F^-1(1 - p_i | alpha, beta)``, and the weighted sum is rescaled by
``a = (sum w_i^alpha)^(-1/alpha)``.  Under independence and a true global
null the statistic ``T = a * sum w_i W_i`` is again ``S(alpha, beta)``, so the
upper ``s`` quantile of that law is an exact level-``s`` cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .stable import DEFAULT_POLICY, EvalPolicy, StableParams, ppf_batch, quantile, sf

__all__ = [
    "TRUNCATION",
    "SctConfig",
    "TestOutcome",
    "truncate",
    "check_pvalues",
    "check_weights",
    "equal_weights",
    "normalizer",
    "transform",
    "sct_statistic",
    "sct_test",
    "cct_statistic",
    "cct_test",
    "stouffer_statistic",
    "stouffer_test",
    "fisher_statistic",
    "fisher_test",
    "bonferroni_test",
]

# p-values are clipped into this interval before being transformed
TRUNCATION = (1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class SctConfig:
    """Stable law and level for one stable combination test."""

    alpha: float
    beta: float
    level: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2) for the stable combination test, got {self.alpha}")
        if not -1.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (-1, 1], got {self.beta}")
        if self.alpha == 1.0 and self.beta != 0.0:
            raise ValueError("alpha = 1 is only supported with beta = 0")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")


@dataclass(frozen=True)
class TestOutcome:
    """Result of one combination test."""

    statistic: float
    cutoff: float
    combined_p: float
    reject: bool

    __test__ = False  # not a pytest class


def truncate(pvalues, bounds=TRUNCATION) -> np.ndarray:
    lo, hi = bounds
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"truncation interval must satisfy 0 < lo < hi < 1, got {bounds}")
    return np.clip(np.asarray(pvalues, dtype=float), lo, hi)


def check_pvalues(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p-values must be a non-empty one-dimensional sequence")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def equal_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def check_weights(weights, n: int | None = None, c0: float | None = None) -> np.ndarray:
    """Validate a weight vector: positive entries summing to one.

    With ``c0`` given, also require ``min w_i >= c0 / n``, the balance
    condition under which the power guarantee is stated.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty one-dimensional sequence")
    if n is not None and w.size != n:
        raise ValueError(f"expected {n} weights, got {w.size}")
    if not np.all(np.isfinite(w) & (w > 0.0)):
        raise ValueError("weights must be finite and strictly positive")
    if abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 (sum is {math.fsum(w)!r})")
    if c0 is not None and w.min() < c0 / w.size:
        raise ValueError(f"smallest weight {w.min():.3g} is below c0/n = {c0 / w.size:.3g}")
    return w


def _prepare(pvalues, weights, bounds):
    p = truncate(check_pvalues(pvalues), bounds)
    w = equal_weights(p.size) if weights is None else check_weights(weights, p.size)
    return p, w


def normalizer(weights, alpha: float) -> float:
    """``a = (sum w_j^alpha)^(-1/alpha)``."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    w = check_weights(weights)
    # log-sum-exp keeps tiny alpha from over/underflowing
    return math.exp(-special.logsumexp(alpha * np.log(w)) / alpha)


def transform(pvalues, alpha: float, beta: float, policy: EvalPolicy = DEFAULT_POLICY, bounds=TRUNCATION) -> np.ndarray:
    """``W_i = F^-1(1 - p_i | alpha, beta)`` after truncation into ``bounds``."""
    p = truncate(check_pvalues(pvalues), bounds)
    return ppf_batch(alpha, beta, p, policy)


def sct_statistic(pvalues, weights=None, alpha: float = 1.0, beta: float = 0.0, policy=DEFAULT_POLICY, bounds=TRUNCATION) -> float:
    """``T = a * sum w_i F^-1(1 - p_i | alpha, beta)``; equal weights if none are given."""
    p, w = _prepare(pvalues, weights, bounds)
    terms = w * transform(p, alpha, beta, policy, bounds)
    return normalizer(w, alpha) * math.fsum(terms)


def sct_test(pvalues, weights=None, config: SctConfig = SctConfig(1.0, 0.0), policy=DEFAULT_POLICY, bounds=TRUNCATION) -> TestOutcome:
    """Reject when ``T`` exceeds the upper ``level`` quantile of ``S(alpha, beta)``.

    ``combined_p`` is the upper tail probability ``1 - F(T)``; rejecting by
    ``T > cutoff`` and by ``combined_p < level`` agree up to quantile
    tolerance.
    """
    t = sct_statistic(pvalues, weights, config.alpha, config.beta, policy, bounds)
    law = StableParams.standard(config.alpha, config.beta)
    cutoff = quantile(law, None, policy, upper=config.level)
    combined = float(sf(law, t, policy))
    return TestOutcome(t, cutoff, combined, bool(t > cutoff))


def cct_statistic(pvalues, weights=None, bounds=TRUNCATION) -> float:
    """Cauchy combination ``sum w_i tan(pi (1/2 - p_i))``."""
    p, w = _prepare(pvalues, weights, bounds)
    # 1/tan(pi p) equals tan(pi (1/2 - p)) without cancellation for tiny p
    return math.fsum(w / np.tan(np.pi * p))


def cct_test(pvalues, weights=None, level: float = 0.05, bounds=TRUNCATION) -> TestOutcome:
    t = cct_statistic(pvalues, weights, bounds)
    cutoff = 1.0 / math.tan(math.pi * level)
    combined = math.atan2(1.0, t) / math.pi
    return TestOutcome(t, cutoff, combined, bool(t > cutoff))


def stouffer_statistic(pvalues, weights=None, bounds=TRUNCATION) -> float:
    """``(sum w_j^2)^(-1/2) sum w_i Phi^-1(1 - p_i)``; standard normal under independence."""
    p, w = _prepare(pvalues, weights, bounds)
    z = -special.ndtri(p)
    return math.fsum(w * z) / math.sqrt(math.fsum(w * w))


def stouffer_test(pvalues, weights=None, level: float = 0.05, bounds=TRUNCATION) -> TestOutcome:
    t = stouffer_statistic(pvalues, weights, bounds)
    cutoff = float(-special.ndtri(level))
    combined = float(special.ndtr(-t))
    return TestOutcome(t, cutoff, combined, bool(t > cutoff))


def fisher_statistic(pvalues, bounds=TRUNCATION) -> float:
    """``-2 sum log p_i``; chi-square with ``2n`` degrees of freedom under independence."""
    p = truncate(check_pvalues(pvalues), bounds)
    return -2.0 * math.fsum(np.log(p))


def fisher_test(pvalues, level: float = 0.05, bounds=TRUNCATION) -> TestOutcome:
    p = check_pvalues(pvalues)
    t = fisher_statistic(p, bounds)
    dist = stats.chi2(2 * p.size)
    cutoff = float(dist.isf(level))
    combined = float(dist.sf(t))
    return TestOutcome(t, cutoff, combined, bool(t > cutoff))


def bonferroni_test(pvalues, level: float = 0.05) -> bool:
    """Reject iff ``min p_i < level / n``; raw p-values, no truncation."""
    p = check_pvalues(pvalues)
    return bool(p.min() < level / p.size)
