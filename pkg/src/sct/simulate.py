"""Monte Carlo size and power of combination tests under correlated Gaussian scores.

Each replication draws ``X ~ N_n(mu, Sigma)`` and forms two-sided p-values
``p_i = 2 (1 - Phi(|X_i|))``.  Every method sees the same p-values (common
random numbers), so differences between methods are not diluted by sampling
noise.

Random streams are keyed by ``(model kind, rho, stage, replication)`` under
the master seed through :class:`numpy.random.SeedSequence` and drawn with
Philox.  A replication therefore produces the same numbers however the work
is split between threads, and the null stage (stage 0) never shares a stream
with the alternative stage (stage 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .combine import TRUNCATION, SctConfig, equal_weights, normalizer
from .stable import DEFAULT_POLICY, EvalPolicy, StableNumericsError, StableParams, ppf_batch, quantile

__all__ = [
    "CorrelationModel",
    "AlternativeSpec",
    "Method",
    "SimulationConfig",
    "ResultRow",
    "PowerReport",
    "STUDY_MODELS",
    "correlation_matrix",
    "mvn_scores",
    "pvalues_from_scores",
    "sparse_mean",
    "simulate_pvalues",
    "method_statistics",
    "method_cutoff",
    "estimate_size",
    "estimate_raw_power",
    "estimate_size_adjusted_power",
    "grid_run",
    "mc_se",
    "default_methods",
]

_KINDS = ("independent", "ar1", "exchangeable", "polydecay")
NULL_STAGE = 0
ALT_STAGE = 1


@dataclass(frozen=True)
class CorrelationModel:
    """Correlation structure of the test scores.

    ``independent``: identity.  ``ar1``: ``rho^|i-j|``.  ``exchangeable``:
    ``rho`` off the diagonal.  ``polydecay``: ``1 / (0.7 + |i-j|^rho)``.
    """

    kind: str
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown correlation model {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "rho", float(self.rho))
        if not math.isfinite(self.rho):
            raise ValueError("rho must be finite")
        if self.kind == "ar1" and not 0.0 <= self.rho < 1.0:
            raise ValueError(f"ar1 rho must lie in [0, 1), got {self.rho}")
        if self.kind == "exchangeable" and not -1.0 < self.rho < 1.0:
            raise ValueError(f"exchangeable rho must lie in (-1, 1), got {self.rho}")
        if self.kind == "polydecay" and not self.rho > 0.0:
            raise ValueError(f"polydecay rho must be positive, got {self.rho}")
        if self.kind == "independent" and self.rho != 0.0:
            raise ValueError("the independent model takes no rho")

    @property
    def stream_key(self) -> tuple[int, int]:
        return _KINDS.index(self.kind), int(round(self.rho * 1_000_000))


# every correlation model at the rho settings of the reference grid
STUDY_MODELS = (
    CorrelationModel("independent"),
    *(CorrelationModel("ar1", r) for r in (0.2, 0.4, 0.6, 0.8)),
    *(CorrelationModel("exchangeable", r) for r in (0.2, 0.4, 0.6, 0.8)),
    *(CorrelationModel("polydecay", r) for r in (0.2, 0.4, 0.6, 0.8)),
)


@dataclass(frozen=True)
class AlternativeSpec:
    """Sparse alternative: ``floor(n^gamma)`` means of size ``sqrt(2 r log n)``.

    ``sign_rule`` is ``"positive"`` (every mean positive) or ``"random"``
    (independent fair signs).  ``rng_seed`` is only used by
    :func:`sparse_mean` when it is called without a generator.
    """

    gamma: float = 0.43
    r: float = 0.54
    sign_rule: str = "positive"
    rng_seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise ValueError(f"gamma must lie in (0, 0.5), got {self.gamma}")
        if not self.r >= 0.0:
            raise ValueError(f"r must be nonnegative, got {self.r}")
        if self.sign_rule not in ("positive", "random"):
            raise ValueError(f"sign_rule must be 'positive' or 'random', got {self.sign_rule!r}")

    def support_size(self, n: int) -> int:
        # guard against n**gamma landing a hair below an integer
        return max(1, int(math.floor(n**self.gamma + 1e-12)))

    def magnitude(self, n: int) -> float:
        return math.sqrt(2.0 * self.r * math.log(n))

    def in_power_regime(self, alpha: float) -> bool:
        """``sqrt(r) + sqrt(gamma) > max(sqrt(alpha), 1)``, the signal strength condition for power -> 1."""
        return math.sqrt(self.r) + math.sqrt(self.gamma) > max(math.sqrt(alpha), 1.0)


@dataclass(frozen=True)
class Method:
    """A combination test as run by the simulator.

    ``name`` is one of ``sct``, ``cct``, ``stouffer``, ``fisher``,
    ``bonferroni``; ``alpha`` and ``beta`` are set for ``sct`` only.
    """

    name: str
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.name == "sct":
            SctConfig(self.alpha, self.beta)
        elif self.name in ("cct", "stouffer", "fisher", "bonferroni"):
            if self.alpha is not None or self.beta is not None:
                raise ValueError(f"{self.name} takes no stable parameters")
        else:
            raise ValueError(f"unknown method {self.name!r}")

    @classmethod
    def sct(cls, alpha: float, beta: float) -> "Method":
        return cls("sct", float(alpha), float(beta))

    @property
    def csv_alpha(self) -> str:
        return "" if self.alpha is None else f"{self.alpha:g}"

    @property
    def csv_beta(self) -> str:
        return "" if self.beta is None else f"{self.beta:g}"


def default_methods(alphas, betas, cct=True, stouffer=True, fisher=False, bonferroni=False) -> list[Method]:
    """SCT over the (alpha, beta) grid, skipping alpha = 1 with beta != 0, plus baselines."""
    out = [Method.sct(a, b) for a in alphas for b in betas if not (a == 1.0 and b != 0.0)]
    out += [Method(name) for name, on in (("cct", cct), ("stouffer", stouffer), ("fisher", fisher), ("bonferroni", bonferroni)) if on]
    return out


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 40
    reps: int = 1000
    level: float = 0.05
    models: tuple = (CorrelationModel("independent"),)
    alphas: tuple = (0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9)
    betas: tuple = (-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    include_cct: bool = True
    include_stouffer: bool = True
    include_fisher: bool = False
    include_bonferroni: bool = False
    alternative: AlternativeSpec | None = AlternativeSpec()
    truncation: tuple = TRUNCATION
    seed: int = 20240101
    threads: int = 1
    policy: EvalPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        lo, hi = self.truncation
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("truncation must satisfy 0 < lo < hi < 1")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        self.methods()  # validates the grid

    def methods(self) -> list[Method]:
        return default_methods(
            self.alphas, self.betas, self.include_cct, self.include_stouffer, self.include_fisher, self.include_bonferroni
        )


# ---------------------------------------------------------------------------
# data generation


def correlation_matrix(model: CorrelationModel, n: int) -> np.ndarray:
    """Correlation matrix of ``model`` for ``n`` scores; checked positive definite."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    if model.kind == "independent":
        sigma = np.eye(n)
    elif model.kind == "ar1":
        sigma = model.rho**lag
    elif model.kind == "exchangeable":
        if n > 1 and model.rho <= -1.0 / (n - 1):
            raise np.linalg.LinAlgError(f"exchangeable rho={model.rho} is not positive definite for n={n}")
        sigma = np.where(lag == 0, 1.0, model.rho)
    else:
        sigma = np.where(lag == 0, 1.0, 1.0 / (0.7 + lag**model.rho))
    np.linalg.cholesky(sigma)  # raises LinAlgError when not positive definite
    return sigma


def mvn_scores(mean, correlation, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """``mean + L z`` with ``L`` the Cholesky factor of ``correlation`` and ``z`` standard normal.

    With ``size`` given, returns ``size`` rows drawn one after another.
    """
    corr = np.asarray(correlation, dtype=float)
    chol = np.linalg.cholesky(corr)
    n = corr.shape[0]
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (n,))
    if size is None:
        return mean + chol @ rng.standard_normal(n)
    z = rng.standard_normal((size, n))
    return mean + z @ chol.T


def pvalues_from_scores(x, bounds=TRUNCATION) -> np.ndarray:
    """Two-sided p-values ``2 (1 - Phi(|x|))``, clipped into ``bounds`` (pass None to skip)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("scores must be finite")
    p = 2.0 * special.ndtr(-np.abs(x))
    if bounds is None:
        return p
    return np.clip(p, *bounds)


def sparse_mean(n: int, spec: AlternativeSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Mean vector with ``floor(n^gamma)`` entries of size ``sqrt(2 r log n)`` at random positions."""
    if rng is None:
        rng = np.random.default_rng(spec.rng_seed)
    mu = np.zeros(n)
    if spec.r == 0.0:
        return mu
    k = min(spec.support_size(n), n)
    idx = rng.choice(n, size=k, replace=False)
    signs = 1.0 if spec.sign_rule == "positive" else rng.choice((-1.0, 1.0), size=k)
    mu[idx] = signs * spec.magnitude(n)
    return mu


def _stream(seed: int, model: CorrelationModel, stage: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(*model.stream_key, stage, rep))
    return np.random.Generator(np.random.Philox(ss))


def simulate_pvalues(
    model: CorrelationModel,
    n: int,
    reps: int,
    seed: int,
    stage: int,
    alternative: AlternativeSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Untruncated p-values and the scores behind them, both ``(reps, n)``.

    Under ``alternative`` a fresh sparse mean is drawn in every replication.
    """
    chol = np.linalg.cholesky(correlation_matrix(model, n))
    x = np.empty((reps, n))
    for rep in range(reps):
        rng = _stream(seed, model, stage, rep)
        mu = sparse_mean(n, alternative, rng) if alternative is not None else 0.0
        x[rep] = mu + chol @ rng.standard_normal(n)
    return pvalues_from_scores(x, None), x


# ---------------------------------------------------------------------------
# statistics and cutoffs


def method_statistics(method: Method, p_raw: np.ndarray, bounds=TRUNCATION, policy=DEFAULT_POLICY) -> np.ndarray:
    """Statistic of ``method`` for every row of ``p_raw`` (equal weights).

    Larger values are more significant for every method; Bonferroni uses
    ``-log(min p)`` on raw p-values.
    """
    p_raw = np.atleast_2d(p_raw)
    n = p_raw.shape[1]
    if method.name == "bonferroni":
        with np.errstate(divide="ignore"):
            return -np.log(p_raw.min(axis=1))
    p = np.clip(p_raw, *bounds)
    w = equal_weights(n)
    if method.name == "sct":
        terms = ppf_batch(method.alpha, method.beta, p.ravel(), policy).reshape(p.shape)
        return normalizer(w, method.alpha) * (terms @ w)
    if method.name == "cct":
        return (1.0 / np.tan(np.pi * p)) @ w
    if method.name == "stouffer":
        return (-special.ndtri(p) @ w) / math.sqrt(w @ w)
    return -2.0 * np.log(p).sum(axis=1)


def method_cutoff(method: Method, n: int, level: float, policy=DEFAULT_POLICY) -> float:
    """Rejection threshold from the null distribution of the statistic under independence."""
    if method.name == "sct":
        return float(quantile(StableParams.standard(method.alpha, method.beta), None, policy, upper=level))
    if method.name == "cct":
        return 1.0 / math.tan(math.pi * level)
    if method.name == "stouffer":
        return float(-special.ndtri(level))
    if method.name == "fisher":
        return float(stats.chi2(2 * n).isf(level))
    return -math.log(level / n)


def mc_se(p: float, reps: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / reps)


# ---------------------------------------------------------------------------
# estimators


def _model(config, model):
    return config.models[0] if model is None else model


def _null_stats(config, method, model):
    p, _ = simulate_pvalues(model, config.n, config.reps, config.seed, NULL_STAGE)
    return method_statistics(method, p, config.truncation, config.policy)


def _alt_stats(config, method, model):
    if config.alternative is None:
        raise ValueError("this estimate needs an alternative")
    p, _ = simulate_pvalues(model, config.n, config.reps, config.seed, ALT_STAGE, config.alternative)
    return method_statistics(method, p, config.truncation, config.policy)


def estimate_size(config: SimulationConfig, method: Method, model: CorrelationModel | None = None) -> float:
    """Rejection rate under the global null with the theoretical cutoff."""
    model = _model(config, model)
    t = _null_stats(config, method, model)
    return float(np.mean(t > method_cutoff(method, config.n, config.level, config.policy)))


def estimate_raw_power(config: SimulationConfig, method: Method, model: CorrelationModel | None = None) -> float:
    """Rejection rate under the sparse alternative with the theoretical cutoff."""
    model = _model(config, model)
    t = _alt_stats(config, method, model)
    return float(np.mean(t > method_cutoff(method, config.n, config.level, config.policy)))


def empirical_cutoff(null_statistics, level: float) -> float:
    """Upper ``level`` quantile of simulated null statistics (linear interpolation)."""
    return float(np.quantile(np.asarray(null_statistics), 1.0 - level))


def estimate_size_adjusted_power(config: SimulationConfig, method: Method, model: CorrelationModel | None = None) -> float:
    """Rejection rate under the alternative with the cutoff set at the empirical null quantile.

    The null statistics come from the null stage streams and the
    alternative statistics from fresh alternative stage streams.
    """
    model = _model(config, model)
    cut = empirical_cutoff(_null_stats(config, method, model), config.level)
    return float(np.mean(_alt_stats(config, method, model) > cut))


# ---------------------------------------------------------------------------
# grid runner

METRICS = ("size", "raw_power", "adj_power")


@dataclass(frozen=True)
class ResultRow:
    model: str
    rho: float
    method: str
    alpha: str
    beta: str
    metric: str
    value: float
    mc_se: float
    reps: int
    seed: int


@dataclass
class PowerReport:
    """Rows of the grid run plus any cells that failed numerically."""

    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def lookup(self, model: CorrelationModel, method: Method, metric: str) -> ResultRow:
        for row in self.rows:
            if (
                row.model == model.kind
                and row.rho == model.rho
                and row.method == method.name
                and row.alpha == method.csv_alpha
                and row.beta == method.csv_beta
                and row.metric == metric
            ):
                return row
        raise KeyError((model, method, metric))


def _cell_rows(config, model, method, metrics, p_null, p_alt):
    cut = method_cutoff(method, config.n, config.level, config.policy)
    t_null = method_statistics(method, p_null, config.truncation, config.policy)
    values = {"size": float(np.mean(t_null > cut))}
    if p_alt is not None:
        t_alt = method_statistics(method, p_alt, config.truncation, config.policy)
        values["raw_power"] = float(np.mean(t_alt > cut))
        values["adj_power"] = float(np.mean(t_alt > empirical_cutoff(t_null, config.level)))
    return [
        ResultRow(
            model.kind, model.rho, method.name, method.csv_alpha, method.csv_beta,
            m, values[m], mc_se(values[m], config.reps), config.reps, config.seed,
        )
        for m in metrics
        if m in values
    ]


def grid_run(config: SimulationConfig, metrics=METRICS, threads: int | None = None) -> PowerReport:
    """Size, raw power and size-adjusted power for every (model, method) cell.

    Cells run on a thread pool of ``threads`` workers (default
    ``config.threads``, overridden by the ``SCT_THREADS`` environment
    variable).  Results do not depend on the worker count: the p-values are
    generated before any cell runs and every cell is a pure function of them.
    A cell that raises a numerical error is recorded in ``failures`` and the
    grid continues.
    """
    for m in metrics:
        if m not in METRICS:
            raise ValueError(f"unknown metric {m!r}")
    threads = threads or int(os.environ.get("SCT_THREADS", config.threads))
    methods = config.methods()
    data = {}
    for model in config.models:
        p_null, _ = simulate_pvalues(model, config.n, config.reps, config.seed, NULL_STAGE)
        p_alt = None
        if config.alternative is not None:
            p_alt, _ = simulate_pvalues(model, config.n, config.reps, config.seed, ALT_STAGE, config.alternative)
        data[model] = (p_null, p_alt)

    def run(method):
        out, failed = [], []
        for model in config.models:
            try:
                out.extend(_cell_rows(config, model, method, metrics, *data[model]))
            except (StableNumericsError, FloatingPointError) as exc:
                failed.append((model, method, str(exc)))
        return out, failed

    # sct methods sharing (alpha, beta) reuse one cached quantile table, so a
    # method is the unit of work
    if threads == 1:
        results = [run(m) for m in methods]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, methods))
    report = PowerReport()
    by_method = {m: r for m, r in zip(methods, results)}
    for model in config.models:
        for method in methods:
            rows, _ = by_method[method]
            report.rows.extend(r for r in rows if r.model == model.kind and r.rho == model.rho)
    for _, failed in results:
        report.failures.extend(failed)
    return report
