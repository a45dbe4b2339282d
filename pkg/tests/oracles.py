"""Independent numerical references shared by the test modules."""

import math

import numpy as np
from scipy import integrate, optimize


def symmetric_cdf_on_grid(log_pdf, half_width, m=4001):
    """CDF of a symmetric density on ``linspace(-w, w, m)`` by piecewise adaptive quadrature."""
    xs = np.linspace(0.0, half_width, (m + 1) // 2)
    pieces = [integrate.quad(lambda u: math.exp(log_pdf(u)), a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(xs[:-1], xs[1:])]
    right = 0.5 + np.concatenate([[0.0], np.cumsum(pieces)])
    grid = np.concatenate([-xs[:0:-1], xs])
    cdf = np.concatenate([1.0 - right[:0:-1], right])
    return grid, cdf


def ks_against_grid(draws, grid, cdf):
    """Kolmogorov-Smirnov distance using a linearly interpolated reference CDF."""
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    f = np.interp(x, grid, cdf, left=0.0, right=1.0)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def gig_log_kernel(x, p, a, b):
    return (p - 1.0) * math.log(x) - 0.5 * (a * x + b / x)


def gig_mode(p, a, b):
    # maximiser of the kernel, closed form
    return ((p - 1.0) + math.sqrt((p - 1.0) ** 2 + a * b)) / a


def _gig_support(p, a, b, drop=60.0):
    """Interval outside which the kernel is below exp(-drop) times its peak."""
    mode = gig_mode(p, a, b)
    peak = gig_log_kernel(mode, p, a, b)
    lo = optimize.brentq(lambda x: gig_log_kernel(x, p, a, b) - peak + drop, mode * 1e-12, mode)
    hi = mode * 2.0
    while gig_log_kernel(hi, p, a, b) - peak > -drop:
        hi *= 2.0
    hi = optimize.brentq(lambda x: gig_log_kernel(x, p, a, b) - peak + drop, mode, hi)
    return lo, hi, peak


def gig_cdf_table(p, a, b, cells=2000):
    """Tabulated CDF from the unnormalised kernel only (no Bessel functions)."""
    lo, hi, peak = _gig_support(p, a, b)
    dens = lambda x: math.exp(gig_log_kernel(x, p, a, b) - peak)
    # log spacing resolves both the spike near zero and long right tails
    knots = np.geomspace(lo, hi, cells + 1)
    pieces = [integrate.quad(dens, u, v, epsabs=0, epsrel=1e-11)[0] for u, v in zip(knots[:-1], knots[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return knots, cum / cum[-1]


def gig_mean_by_quadrature(p, a, b):
    lo, hi, peak = _gig_support(p, a, b)
    knots = np.geomspace(lo, hi, 201)
    f0 = lambda x: math.exp(gig_log_kernel(x, p, a, b) - peak)
    z0 = sum(integrate.quad(f0, u, v, epsrel=1e-12)[0] for u, v in zip(knots[:-1], knots[1:]))
    z1 = sum(integrate.quad(lambda x: x * f0(x), u, v, epsrel=1e-12)[0] for u, v in zip(knots[:-1], knots[1:]))
    return z1 / z0


def model_posterior_by_enumeration(X, y, sigma2, tau2, rho2, pi_tilde):
    """Exact p(gamma | rest) over all 2^p models via the Gaussian marginal of y.

    Integrating beta_gamma ~ N(0, tau2 rho2 I) out of y = X_gamma beta_gamma + e,
    e ~ N(0, diag(sigma2)), gives y ~ N(0, diag(sigma2) + tau2 rho2 X_gamma X_gamma').
    Returns (models, probabilities) with models as boolean rows.
    """
    from itertools import product

    from scipy.stats import multivariate_normal

    n, p = X.shape
    models = np.array(list(product([False, True], repeat=p)))
    logw = []
    for g in models:
        cov = np.diag(sigma2) + tau2 * rho2 * X[:, g] @ X[:, g].T
        k = int(g.sum())
        logw.append(multivariate_normal(np.zeros(n), cov).logpdf(y) + k * math.log(pi_tilde) + (p - k) * math.log1p(-pi_tilde))
    logw = np.array(logw)
    w = np.exp(logw - logw.max())
    return models, w / w.sum()
