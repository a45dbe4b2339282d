"""Joint-distribution ("getting it right") checks for the Gibbs sampler.

The marginal-conditional simulator draws parameters from the prior and data
given parameters. The successive-conditional simulator alternates a data
draw with one Gibbs sweep. If every conditional is right, both produce the
same joint distribution of parameters.
"""

import numpy as np

from .distributions import gig_sample
from .sampler import ModelState, gibbs_step

__all__ = ["prior_draw", "simulate_response", "marginal_conditional", "successive_conditional", "GEWEKE_FIELDS"]

GEWEKE_FIELDS = ("tau2", "rho2", "eta", "alpha", "pi_tilde", "omega", "p_gamma", "beta_1")


def prior_draw(n, p, hyper, rng):
    """One draw of the full parameter state from the prior."""
    hyper = hyper.resolve(p)
    omega = hyper.omega_fixed if hyper.omega_fixed is not None else float(rng.beta(hyper.m1, hyper.m2))
    if hyper.error_mode == "hem":
        alpha = 0
    elif hyper.error_mode == "tem":
        alpha = 1
    else:
        alpha = int(rng.random() < omega)
    eta = float(hyper.eta_grid[rng.integers(len(hyper.eta_grid))])
    rho2 = hyper.b / rng.standard_gamma(hyper.a)
    tau2 = (hyper.nu / 2.0) / rng.standard_gamma(hyper.nu / 2.0)
    pi_tilde = float(rng.beta(hyper.s1, hyper.s2))
    gamma = rng.random(p) < pi_tilde
    beta = np.where(gamma, rng.standard_normal(p) * np.sqrt(rho2 * tau2), 0.0)
    if alpha == 0:
        sigma2 = gig_sample(rng, 1.0, eta / rho2, eta * rho2, size=n)
    else:
        sigma2 = (eta * rho2 / 2.0) / rng.standard_gamma(eta / 2.0, size=n)
    return ModelState(gamma, beta, sigma2, tau2, rho2, alpha, eta, pi_tilde, omega)


def simulate_response(state, X, rng):
    return X @ state.beta + rng.standard_normal(X.shape[0]) * np.sqrt(state.sigma2)


def _row(state):
    return (state.tau2, state.rho2, state.eta, state.alpha, state.pi_tilde, state.omega, state.p_gamma, state.beta[0])


def marginal_conditional(X, hyper, draws, rng):
    """Independent prior draws; returns a dict of arrays keyed by ``GEWEKE_FIELDS``."""
    n, p = X.shape
    rows = [_row(prior_draw(n, p, hyper, rng)) for _ in range(draws)]
    return dict(zip(GEWEKE_FIELDS, np.array(rows).T))


def successive_conditional(X, hyper, draws, rng, thin=1):
    """Alternate ``y | theta`` and one sweep of ``theta | y``; keep every ``thin``-th state."""
    n, p = X.shape
    hyper = hyper.resolve(p)
    state = prior_draw(n, p, hyper, rng)
    rows = []
    for i in range(draws * thin):
        y = simulate_response(state, X, rng)
        gibbs_step(state, X, y, hyper, rng)
        if (i + 1) % thin == 0:
            rows.append(_row(state))
    return dict(zip(GEWEKE_FIELDS, np.array(rows).T))
