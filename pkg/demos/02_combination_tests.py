"""
Combining p-values
==================

The stable combination test maps each p-value to an upper stable quantile
and sums.  Light-tailed choices (alpha near 2) behave like Stouffer, heavy
ones (alpha near 0) like a minimum-p rule, and alpha = 1, beta = 0 is the
Cauchy combination test.
"""

import numpy as np

from sct.combine import SctConfig, bonferroni_test, cct_test, fisher_test, sct_test, stouffer_test

rng = np.random.default_rng(1)

# Forty null p-values plus one strong signal.
p = rng.random(40)
p[7] = 1e-5

for alpha, beta in [(0.5, 1.0), (0.9, 1.0), (1.0, 0.0), (1.5, 1.0), (1.9, 0.0)]:
    out = sct_test(p, config=SctConfig(alpha, beta))
    print(
        f"SCT({alpha}, {beta}):  T = {out.statistic:10.4f}  cutoff = {out.cutoff:8.4f}"
        f"  combined p = {out.combined_p:.4g}  reject = {out.reject}"
    )

print("CCT      ", cct_test(p))
print("Stouffer ", stouffer_test(p))
print("Fisher   ", fisher_test(p))
print("Bonferroni reject:", bonferroni_test(p))

# Weights need not be equal; they must be positive and sum to one.
w = np.full(40, 0.5 / 39)
w[7] = 0.5
print("weighted SCT(1.5, 1):", sct_test(p, w, SctConfig(1.5, 1.0)))

# With a single p-value the combined p-value is the p-value itself.
print("n = 1:", sct_test([0.03], config=SctConfig(1.3, 0.4)).combined_p)
