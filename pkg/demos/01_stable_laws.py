"""
Evaluating stable laws
======================

Distribution function, density and quantiles of S(alpha, beta) in the S1
parametrization, with a look at how the tails approach their power law.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sct.stable import StableParams, cdf, pdf, ppf_batch, quantile, sf, tail_upper_approx

out_dir = Path(__file__).with_name("output")
out_dir.mkdir(exist_ok=True)

# Cauchy, Gaussian and Levy laws have closed forms; everything else goes
# through the one-dimensional integral representation.
for alpha, beta in [(1.0, 0.0), (2.0, 0.0), (0.5, 1.0), (1.5, 0.6)]:
    law = StableParams.standard(alpha, beta)
    print(f"S({alpha}, {beta}):  F(1) = {float(cdf(law, 1.0)):.10f}   f(1) = {float(pdf(law, 1.0)):.10f}")

# Quantiles invert the distribution function to within 1e-8 relative to the
# tail mass, even far in the tails.
law = StableParams.standard(1.1, 1.0)
for upper in (0.05, 1e-3, 1e-6, 1e-9):
    x = float(quantile(law, None, upper=upper))
    print(f"upper mass {upper:.0e}: x = {x:14.6f}   1 - F(x) = {float(sf(law, x)):.6e}")

# Scale and location act on the standardized variable.
scaled = StableParams(1.5, 0.0, tau=2.0, delta=3.0)
print("median of S(1.5, 0, 2, 3):", float(quantile(scaled, 0.5)))

# Densities across the stability index.
x = np.linspace(-6, 6, 241)
fig, ax = plt.subplots(figsize=(6, 4))
for alpha in (0.5, 1.0, 1.5, 1.9):
    ax.plot(x, pdf(StableParams.standard(alpha, 0.5), x), label=f"alpha={alpha}")
ax.set_title("S(alpha, 0.5) densities")
ax.legend()
fig.savefig(out_dir / "densities.svg")

# Exact upper tail against the power law c (1 + beta) x^-alpha.
x = np.geomspace(2, 1e4, 60)
fig, ax = plt.subplots(figsize=(6, 4))
for alpha in (0.7, 1.3, 1.9):
    law = StableParams.standard(alpha, 0.0)
    ax.semilogx(x, sf(law, x) / tail_upper_approx(alpha, 0.0, x), label=f"alpha={alpha}")
ax.axhline(1.0, color="grey", linewidth=0.8)
ax.set_ylabel("exact / power-law tail")
ax.legend()
fig.savefig(out_dir / "tail_ratio.svg")

# Many quantiles of one law at once: the first large call builds an
# interpolation table, later calls reuse it.
q = np.random.default_rng(0).random(100_000)
w = ppf_batch(1.5, 0.6, q)
print("batch of", w.size, "quantiles; sample median", float(np.median(w)))
