"""Independent reference computations used only by the test-suite.

Nothing here calls into the integral-representation code paths of
``sct.stable``; the stable CDF oracle inverts the characteristic function
directly (Gil-Pelaez) with its own quadrature.
"""

import math

import numpy as np
from scipy import integrate, stats


def gil_pelaez_cdf(alpha, beta, x):
    """F(x) of the standardized S1 law by Gil-Pelaez inversion.

    F(x) = 1/2 - (1/pi) int_0^inf Im[exp(-iux) phi(u)] / u du

    Substituting v = u^alpha makes the damping exp(-v) uniform in alpha.
    """
    if alpha == 1.0:

        def im(u):
            lg = math.log(u)
            return math.exp(-u) * math.sin(-beta * (2 / math.pi) * u * lg - u * x)

        def integrand(v):
            return im(v) / v

    else:
        t = beta * math.tan(math.pi * alpha / 2)

        def integrand(v):
            u = v ** (1.0 / alpha)
            # du/u = dv / (alpha v)
            return math.exp(-v) * math.sin(t * v - u * x) / (alpha * v)

    total = 0.0
    edges = [0.0, 1e-8, 0.01, 0.1, 0.5, 1, 2, 4, 8, 16, 32, 50]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13, limit=2000)
        total += val
    return 0.5 - total / math.pi


def cauchy_cdf(x):
    return 0.5 + math.atan(x) / math.pi


def levy_cdf(x):
    return math.erfc(math.sqrt(1.0 / (2.0 * x))) if x > 0 else 0.0


def gauss_cdf(x):
    # S(2, beta) is N(0, 2)
    return stats.norm.cdf(x, scale=math.sqrt(2.0))


def central_difference(f, x, h=1e-4):
    """Fourth-order central difference of a scalar function."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def brute_force_quantile(f, p, lo, hi, iters=200):
    """Plain bisection on a monotone distribution function."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equal_weights(n):
    return np.full(n, 1.0 / n)
