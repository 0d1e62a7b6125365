"""Numerical checks of the tail bounds, the normalizer bound and the null law of the SCT.

The two quantile bounds compare ``F^-1(1 - p(x))``, where
``p(x) = 2 (1 - Phi(|x|))`` is a two-sided normal p-value, against explicit
envelopes::

    g(x)  =  c  x^(1/a)  exp(x^2 / (2a)),   c  = [(1 + b) Gamma(a) sin(pi a / 2) / sqrt(2 pi)]^(1/a)
    g~(x) = -c~ x^(-1/a) exp(x^2 / (2a)),   c~ = [(1 - b) Gamma(a) sin(pi a / 2) / sqrt(2 pi)]^(1/a)

The first holds for large ``x`` and the second as ``x -> 0+``.  Both are
asymptotic statements, so each check asserts the bound only beyond a
threshold ``x_star`` and reports where the bound empirically starts to hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .combine import TRUNCATION, normalizer
from .simulate import AlternativeSpec, CorrelationModel, Method, SimulationConfig, mc_se, method_cutoff, method_statistics, simulate_pvalues
from .stable import DEFAULT_POLICY, EvalPolicy, StableParams, cdf, ppf_batch, quantile

__all__ = [
    "BoundCheckResult",
    "KsResult",
    "TrendResult",
    "g_constant",
    "g_envelope",
    "gtilde_constant",
    "gtilde_envelope",
    "check_lemma_g",
    "check_lemma_gtilde",
    "check_normalizer_bound",
    "ks_null_distribution",
    "ks_critical_value",
    "power_trend",
    "CHECKS",
    "run_checks",
]

DEFAULT_G_GRID = np.linspace(3.0, 4.7, 18)
DEFAULT_GTILDE_GRID = np.geomspace(1e-3, 0.1, 21)


@dataclass(frozen=True)
class BoundCheckResult:
    """Pointwise comparison ``lhs > rhs`` on a grid.

    ``asserted`` marks the points where the bound is claimed; ``passed`` is
    true iff ``margin = lhs - rhs`` is positive at every asserted point (or
    nonnegative, up to rounding, when ``strict`` is false).  ``crossover`` is
    the last grid point, walking in from the asymptotic end (``"high"`` for
    x -> inf, ``"low"`` for x -> 0), up to which the bound keeps holding; None
    when it already fails at that end.
    """

    name: str
    grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margin: np.ndarray
    asserted: np.ndarray
    x_star: float
    strict: bool = True
    asymptotic_end: str = "high"

    @property
    def holds(self) -> np.ndarray:
        if self.strict:
            return self.margin > 0.0
        return self.margin >= -1e-12 * np.maximum(1.0, np.abs(self.rhs))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.holds[self.asserted]))

    @property
    def worst_margin(self) -> float:
        m = self.margin[self.asserted]
        return float(m.min()) if m.size else math.nan

    @property
    def first_violation(self):
        """Grid point of the first asserted failure, or None."""
        bad = np.nonzero(self.asserted & ~self.holds)[0]
        return None if bad.size == 0 else float(self.grid[bad[0]])

    @property
    def crossover(self):
        holds = self.holds if self.asymptotic_end == "high" else self.holds[::-1]
        grid = self.grid if self.asymptotic_end == "high" else self.grid[::-1]
        if holds.size == 0 or not holds[-1]:
            return None
        failing = np.nonzero(~holds)[0]
        return float(grid[failing[-1] + 1 if failing.size else 0])


def _envelope_constant(alpha, skew):
    return (skew * math.gamma(alpha) * math.sin(0.5 * math.pi * alpha) / math.sqrt(2.0 * math.pi)) ** (1.0 / alpha)


def g_constant(alpha: float, beta: float) -> float:
    return _envelope_constant(alpha, 1.0 + beta)


def gtilde_constant(alpha: float, beta: float) -> float:
    return _envelope_constant(alpha, 1.0 - beta)


def g_envelope(alpha: float, beta: float, x):
    x = np.asarray(x, dtype=float)
    return g_constant(alpha, beta) * x ** (1.0 / alpha) * np.exp(x * x / (2.0 * alpha))


def gtilde_envelope(alpha: float, beta: float, x):
    x = np.asarray(x, dtype=float)
    return -gtilde_constant(alpha, beta) * x ** (-1.0 / alpha) * np.exp(x * x / (2.0 * alpha))


def _check_ab(alpha, beta, beta_lo_open):
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    lo_ok = beta > -1.0 if beta_lo_open else beta >= -1.0
    if not (lo_ok and beta <= 1.0):
        raise ValueError(f"beta out of range: {beta}")


def check_lemma_g(
    alpha: float, beta: float, x_grid=None, x_star: float = 3.0, policy: EvalPolicy = DEFAULT_POLICY
) -> BoundCheckResult:
    """``F^-1(1 - p(x)) > g(x)`` for ``x >= x_star``.

    p-values are not truncated here; the default grid stops at 4.7, where
    ``p(x)`` is still above 1e-6.
    """
    _check_ab(alpha, beta, beta_lo_open=True)
    x = np.asarray(DEFAULT_G_GRID if x_grid is None else x_grid, dtype=float)
    if np.any(x <= 0.0) or np.any(np.diff(x) <= 0.0):
        raise ValueError("x_grid must be positive and increasing")
    upper = 2.0 * special.ndtr(-x)
    law = StableParams.standard(alpha, beta)
    lhs = np.asarray(quantile(law, None, policy, upper=upper), dtype=float)
    rhs = g_envelope(alpha, beta, x)
    return BoundCheckResult("lemma_g", x, lhs, rhs, lhs - rhs, x >= x_star, x_star)


def check_lemma_gtilde(
    alpha: float,
    beta: float,
    x_grid=None,
    x_star: float = 0.05,
    policy: EvalPolicy = DEFAULT_POLICY,
    dominating_beta: float = 0.0,
) -> BoundCheckResult:
    """``F^-1(1 - p(x)) > g~(x)`` for ``0 < x <= x_star``.

    For ``beta = 1`` the left tail is lighter than any power law and ``c~``
    vanishes; the envelope is then taken from ``dominating_beta < 1``, whose
    left tail dominates that of the totally skewed law.
    """
    _check_ab(alpha, beta, beta_lo_open=False)
    if not -1.0 <= dominating_beta < 1.0:
        raise ValueError("dominating_beta must lie in [-1, 1)")
    x = np.asarray(DEFAULT_GTILDE_GRID if x_grid is None else x_grid, dtype=float)
    if np.any(x <= 0.0) or np.any(x > 0.1) or np.any(np.diff(x) <= 0.0):
        raise ValueError("x_grid must be increasing within (0, 0.1]")
    # 1 - p(x) = 2 Phi(x) - 1 = erf(x / sqrt 2)
    lower = special.erf(x / math.sqrt(2.0))
    law = StableParams.standard(alpha, beta)
    lhs = np.asarray(quantile(law, lower, policy), dtype=float)
    rhs = gtilde_envelope(alpha, dominating_beta if beta == 1.0 else beta, x)
    return BoundCheckResult("lemma_gtilde", x, lhs, rhs, lhs - rhs, x <= x_star, x_star, asymptotic_end="low")


def check_normalizer_bound(weight_samples, alpha_grid) -> BoundCheckResult:
    """``(sum w^alpha)^(-1/alpha) >= min(n^(1 - 1/alpha), 1)`` for every sample and alpha.

    Points are laid out sample-major; ``grid`` holds the alpha of each point.
    Equal weights attain the bound, so the comparison is not strict.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    lhs, rhs, grid = [], [], []
    for w in weight_samples:
        w = np.asarray(w, dtype=float)
        n = w.size
        for a in alphas:
            lhs.append(normalizer(w, a))
            rhs.append(min(n ** (1.0 - 1.0 / a), 1.0))
            grid.append(a)
    lhs, rhs = np.array(lhs), np.array(rhs)
    asserted = np.ones(lhs.size, dtype=bool)
    return BoundCheckResult("normalizer", np.array(grid), lhs, rhs, lhs - rhs, asserted, math.nan, strict=False)


# ---------------------------------------------------------------------------
# null distribution and power


def ks_critical_value(draws: int) -> float:
    """Asymptotic 1% critical value of the one-sample KS distance."""
    return 1.63 / math.sqrt(draws)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    draws: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical


def null_statistics(
    method: str, alpha: float, beta: float, n: int, draws: int, seed: int = 0, policy=DEFAULT_POLICY, bounds=TRUNCATION
) -> np.ndarray:
    """SCT statistics of ``draws`` vectors of ``n`` independent uniform p-values (equal weights)."""
    if method == "cct":
        alpha, beta = 1.0, 0.0
    elif method != "sct":
        raise ValueError(f"method must be 'sct' or 'cct', got {method!r}")
    rng = np.random.default_rng(seed)
    p = np.clip(rng.random((draws, n)), *bounds)
    w = np.full(n, 1.0 / n)
    terms = ppf_batch(alpha, beta, p.ravel(), policy).reshape(p.shape)
    return normalizer(w, alpha) * (terms @ w)


def ks_null_distribution(
    method: str, alpha: float, beta: float, n: int = 40, draws: int = 10_000, seed: int = 0, policy=DEFAULT_POLICY
) -> KsResult:
    """Kolmogorov-Smirnov distance between simulated null statistics and ``S(alpha, beta)``.

    Under independence the statistic is exactly stable (up to the p-value
    truncation), so the check passes iff the distance is below the 1%
    critical value ``1.63 / sqrt(draws)``.
    """
    t = np.sort(null_statistics(method, alpha, beta, n, draws, seed, policy))
    if method == "cct":
        alpha, beta = 1.0, 0.0
    f = np.asarray(cdf(StableParams.standard(alpha, beta), t, policy), dtype=float)
    k = np.arange(1, draws + 1)
    d = max(float(np.max(k / draws - f)), float(np.max(f - (k - 1) / draws)))
    return KsResult(d, ks_critical_value(draws), draws)


@dataclass(frozen=True)
class TrendResult:
    n_list: tuple
    powers: tuple
    ses: tuple
    in_power_regime: bool

    def increasing(self, n_se: float = 2.0) -> bool:
        """Each step up in ``n`` raises power by more than ``n_se`` combined standard errors."""
        pw, se = self.powers, self.ses
        return all(pw[i + 1] - pw[i] > n_se * math.hypot(se[i], se[i + 1]) for i in range(len(pw) - 1))

    def nondecreasing(self, n_se: float = 2.0) -> bool:
        pw, se = self.powers, self.ses
        return all(pw[i + 1] - pw[i] >= -n_se * math.hypot(se[i], se[i + 1]) for i in range(len(pw) - 1))


def power_trend(
    alternative: AlternativeSpec,
    alpha: float,
    beta: float,
    n_list,
    reps: int = 1000,
    seed: int = 0,
    level: float = 0.05,
    model: CorrelationModel = CorrelationModel("independent"),
    policy=DEFAULT_POLICY,
) -> TrendResult:
    """Raw SCT power under the sparse alternative for each ``n`` in ``n_list``."""
    method = Method.sct(alpha, beta)
    powers, ses = [], []
    for n in n_list:
        p, _ = simulate_pvalues(model, n, reps, seed, 1, alternative)
        t = method_statistics(method, p, TRUNCATION, policy)
        pw = float(np.mean(t > method_cutoff(method, n, level, policy)))
        powers.append(pw)
        ses.append(mc_se(pw, reps))
    return TrendResult(tuple(n_list), tuple(powers), tuple(ses), alternative.in_power_regime(alpha))


# ---------------------------------------------------------------------------
# suite

KS_CASES = ((0.5, 1.0), (1.0, 0.0), (1.5, 0.6), (1.9, -0.8))
TREND_ALTERNATIVE = AlternativeSpec(gamma=0.43, r=0.54)


def _grid(quick):
    if quick:
        return (0.5, 1.1, 1.5), (-0.4, 0.0, 1.0)
    cfg = SimulationConfig()
    return cfg.alphas, cfg.betas


def _lemma_suite(check, quick, beta_ok):
    alphas, betas = _grid(quick)
    results = [check(a, b) for a in alphas for b in betas if beta_ok(b) and not (a == 1.0 and b != 0.0)]
    return min(r.worst_margin for r in results), all(r.passed for r in results)


def _suite_lemma_g(quick):
    return _lemma_suite(check_lemma_g, quick, lambda b: b > -1.0)


def _suite_lemma_gtilde(quick):
    return _lemma_suite(check_lemma_gtilde, quick, lambda b: True)


def _suite_normalizer(quick):
    rng = np.random.default_rng(0)
    count = 100 if quick else 1000
    sizes = (2, 10, 40, 500)
    samples = [rng.dirichlet(np.full(sizes[i % 4], 0.5)) for i in range(count)]
    r = check_normalizer_bound(samples, np.linspace(0.1, 1.9, 19))
    return r.worst_margin, r.passed


def _suite_ks(quick):
    draws = 2000 if quick else 10_000
    results = [ks_null_distribution("sct", a, b, draws=draws) for a, b in KS_CASES]
    return min(r.critical - r.statistic for r in results), all(r.passed for r in results)


def _suite_trend(quick):
    if quick:
        t = power_trend(TREND_ALTERNATIVE, 1.0, 0.0, (40, 200), reps=300)
        steps = np.diff(t.powers) - 2.0 * np.hypot(t.ses[:-1], t.ses[1:])
        return float(steps.min()), t.increasing()
    t = power_trend(TREND_ALTERNATIVE, 1.0, 0.0, (40, 200, 1000, 2000))
    head = TrendResult(t.n_list[:3], t.powers[:3], t.ses[:3], t.in_power_regime)
    steps = np.diff(head.powers) - 2.0 * np.hypot(head.ses[:-1], head.ses[1:])
    worst = min(float(steps.min()), t.powers[-1] - 0.9)
    return worst, head.increasing() and t.powers[-1] > 0.9


CHECKS = {
    "lemma_g": _suite_lemma_g,
    "lemma_gtilde": _suite_lemma_gtilde,
    "normalizer": _suite_normalizer,
    "ks_null": _suite_ks,
    "power_trend": _suite_trend,
}


def run_checks(selection=None, quick: bool = False):
    """Yield ``(name, worst_margin, passed)`` for each selected check, in order.

    The worst margin is the smallest ``lhs - rhs`` over all asserted points of
    all cases (``critical - statistic`` for the KS check, the smallest power
    step beyond two standard errors for the trend check).
    """
    for name in selection or CHECKS:
        worst, passed = CHECKS[name](quick)
        yield name, float(worst), bool(passed)
