"""Posterior summaries, variable selection and posterior predictive intervals."""

import json
from dataclasses import dataclass

import numpy as np

from . import _gig

__all__ = [
    "PosteriorSummary",
    "summarize",
    "bf_threshold",
    "select_variables",
    "predictive_draws",
    "predictive_intervals",
    "prediction_interval",
]


@dataclass(frozen=True)
class PosteriorSummary:
    """Point summaries of one chain.

    Attributes
    ----------
    beta_median : ndarray, shape (p,)
        Componentwise median of all retained beta draws, zeros included.
    inclusion_prob : ndarray, shape (p,)
        Fraction of retained draws with ``gamma_j = 1``.
    p_hyperbolic : float
        Fraction of retained draws with ``alpha = 0``.
    eta_mode : float
        Most frequent eta atom; ties go to the smaller value.
    mc3_acceptance : float
        Accepted / proposed model moves over the whole run.
    """

    beta_median: np.ndarray
    inclusion_prob: np.ndarray
    p_hyperbolic: float
    eta_mode: float
    mc3_acceptance: float

    @property
    def p_student(self):
        return 1.0 - self.p_hyperbolic

    def to_dict(self):
        return {
            "beta_median": [float(v) for v in self.beta_median],
            "inclusion_prob": [float(v) for v in self.inclusion_prob],
            "p_hyperbolic": float(self.p_hyperbolic),
            "eta_mode": float(self.eta_mode),
            "mc3_acceptance": float(self.mc3_acceptance),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        return cls(
            beta_median=np.asarray(d["beta_median"], dtype=float),
            inclusion_prob=np.asarray(d["inclusion_prob"], dtype=float),
            p_hyperbolic=float(d["p_hyperbolic"]),
            eta_mode=float(d["eta_mode"]),
            mc3_acceptance=float(d["mc3_acceptance"]),
        )


def summarize(trace):
    if len(trace) == 0:
        raise ValueError("cannot summarize an empty trace")
    n_alpha0 = int(np.count_nonzero(trace.alpha == 0))
    grid = np.asarray(trace.eta_grid, dtype=float)
    counts = np.array([np.count_nonzero(trace.eta == g) for g in grid])
    # argmax returns the first maximum, i.e. the smallest eta among ties
    eta_mode = float(grid[int(np.argmax(counts))])
    return PosteriorSummary(
        beta_median=np.median(trace.beta, axis=0),
        inclusion_prob=trace.gamma.mean(axis=0),
        p_hyperbolic=n_alpha0 / len(trace),
        eta_mode=eta_mode,
        mc3_acceptance=trace.acceptance_rate,
    )


def bf_threshold(bf_cut, s1, s2):
    """Inclusion-probability cut-off equivalent to a marginal Bayes factor of ``bf_cut``.

    With prior inclusion probability ``q = s1/(s1+s2)`` and prior odds
    ``r = q/(1-q)``, returns ``bf_cut*r / (1 + bf_cut*r)``.
    """
    if not (bf_cut > 0 and s1 > 0 and s2 > 0):
        raise ValueError("bf_cut, s1 and s2 must be positive")
    odds = bf_cut * (s1 / s2)
    return odds / (1.0 + odds)


def select_variables(inclusion_prob, lam):
    """``gamma_hat_j = 1`` iff ``inclusion_prob_j >= lam``."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    return (np.asarray(inclusion_prob, dtype=float) >= lam).astype(np.int8)


def _mixing_draws(rng, alpha, eta, rho2, size):
    """Fresh error variances, one column per retained state, ``size`` rows."""
    m = alpha.shape[0]
    out = np.empty((size, m))
    hyp = alpha == 0
    if np.any(hyp):
        # GIG(1, eta/rho2, eta rho2) = rho2 * GIG(1, eta, eta)
        e = np.broadcast_to(eta[hyp], (size, int(hyp.sum()))).ravel()
        flat = np.empty(e.shape[0])
        _gig.gig_fill(rng, np.ones_like(e), e, np.ascontiguousarray(e), flat)
        out[:, hyp] = flat.reshape(size, -1) * rho2[hyp]
    st = ~hyp
    if np.any(st):
        shape = eta[st] / 2.0
        out[:, st] = (shape * rho2[st]) / rng.standard_gamma(np.broadcast_to(shape, (size, shape.shape[0])))
    return out


def _check_points(trace, X_new):
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim == 1:
        X_new = X_new[None, :]
    if X_new.ndim != 2 or X_new.shape[1] != trace.p:
        raise ValueError(f"x_new has {X_new.shape[-1]} covariates, trace has {trace.p}")
    if len(trace) == 0:
        raise ValueError("empty trace")
    return X_new


def predictive_draws(trace, x_new, rng):
    """One posterior predictive draw per retained state at a single point.

    Each state contributes a fresh error variance from its own mixing law
    and ``y* ~ N(x_new' beta, sigma*^2)``. Standardized scale.
    """
    x = _check_points(trace, x_new)
    if x.shape[0] != 1:
        raise ValueError("predictive_draws takes a single covariate vector")
    return _draw_block(trace, x, rng)[0]


def _draw_block(trace, X_block, rng):
    mean = X_block @ trace.beta.T
    var = _mixing_draws(rng, trace.alpha, trace.eta, trace.rho2, X_block.shape[0])
    return mean + np.sqrt(var) * rng.standard_normal(mean.shape)


def prediction_interval(draws, level):
    """Equal-tailed interval from type-7 (linear interpolation) sample quantiles."""
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise ValueError("no draws")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)


def predictive_intervals(trace, X_new, rng, level=0.9, chunk=64):
    """Intervals at many points, returning arrays ``(lower, upper, median)``.

    Points are processed in blocks of ``chunk`` to bound memory; every
    point gets its own predictive sample of length ``len(trace)``.
    """
    X_new = _check_points(trace, X_new)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    t = X_new.shape[0]
    out = np.empty((3, t))
    for start in range(0, t, chunk):
        stop = min(start + chunk, t)
        draws = _draw_block(trace, X_new[start:stop], rng)
        out[:, start:stop] = np.quantile(draws, [tail, 1.0 - tail, 0.5], axis=1, method="linear")
    return out[0], out[1], out[2]
