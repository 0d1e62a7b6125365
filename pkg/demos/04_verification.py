"""
Numerical checks
================

The quantile envelopes, the normalizer bound, the exact null law under
independence and the growth of power with n, each as an explicit check.
"""

import numpy as np

from sct.simulate import AlternativeSpec
from sct.verify import (
    check_lemma_g,
    check_lemma_gtilde,
    check_normalizer_bound,
    ks_null_distribution,
    power_trend,
)

# Upper envelope g(x): F^-1(1 - p(x)) > g(x) for large x.
for alpha, beta in [(1.0, 0.0), (1.5, 0.6), (0.9, -0.8)]:
    r = check_lemma_g(alpha, beta)
    print(f"upper ({alpha}, {beta}): pass={r.passed}  worst margin={r.worst_margin:.4g}  holds from x={r.crossover}")

# Lower envelope as x -> 0.  The check asserts the bound below x = 0.05 and
# reports how far in it actually holds.
for alpha, beta in [(1.0, 0.0), (0.5, 1.0), (1.5, 0.0)]:
    r = check_lemma_gtilde(alpha, beta)
    print(f"lower ({alpha}, {beta}): pass={r.passed}  first violation={r.first_violation}")

# The normalizer bound, with equality for equal weights.
rng = np.random.default_rng(3)
weights = [rng.dirichlet(np.ones(n)) for n in (2, 10, 40, 500)]
print("normalizer:", check_normalizer_bound(weights, np.linspace(0.1, 1.9, 10)).passed)

# Under independence the statistic is exactly stable.
ks = ks_null_distribution("sct", 1.5, 0.6, n=40, draws=5000)
print(f"KS distance {ks.statistic:.4f} (1% critical value {ks.critical:.4f})")

# Power grows with n under the sparse alternative.
trend = power_trend(AlternativeSpec(0.43, 0.54), 1.0, 0.0, (40, 200, 1000), reps=400)
print("power by n:", {n: round(p, 3) for n, p in zip(trend.n_list, trend.powers)}, "increasing:", trend.increasing())
