"""Densities, random variates and loss functions used by the error model.

Parametrizations
----------------
* ``GIG(p, a, b)``: density ``(a/b)^(p/2) / (2 K_p(sqrt(ab))) x^(p-1) exp(-(a x + b/x)/2)``.
* ``Gamma(a, b)``: shape ``a``, **rate** ``b``.
* ``IGamma(a, b)``: shape ``a``, **scale** ``b``; density ``b^a/Gamma(a) x^(-a-1) exp(-b/x)``.
* ``Hyperbolic(eta, rho2)``: ``exp(-sqrt(eta (eta + x^2/rho2))) / (2 sqrt(eta rho2) K_1(eta))``.
* ``t(eta, rho2)``: Student-t with ``eta`` degrees of freedom and scale ``sqrt(rho2)``.

Densities are exposed on the log scale only.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _gig
from .special import log_bessel_k, log_gamma_fn

__all__ = [
    "GigParams",
    "gig_log_pdf",
    "gig_sample",
    "hyperbolic_log_pdf",
    "hyperbolic_sample",
    "student_t_log_pdf",
    "student_t_sample",
    "normal_log_pdf",
    "sample_normal",
    "sample_gamma",
    "sample_igamma",
    "sample_beta",
    "sample_bernoulli",
    "sample_disc_uniform",
    "standard_sample",
    "huber_loss",
    "hyperbolic_loss",
]

_LOG_2 = math.log(2.0)
_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class GigParams:
    p: float
    a: float
    b: float

    def __post_init__(self):
        _check_gig(self.p, self.a, self.b)

    def mean(self):
        """``sqrt(b/a) K_{p+1}(sqrt(ab)) / K_p(sqrt(ab))``."""
        w = math.sqrt(self.a * self.b)
        return math.sqrt(self.b / self.a) * math.exp(
            log_bessel_k(self.p + 1.0, w) - log_bessel_k(self.p, w)
        )


def _check_gig(p, a, b):
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    if not (np.all(np.isfinite(p)) and np.all(a > 0) and np.all(b > 0)):
        raise ValueError("GIG needs finite p and a > 0, b > 0")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("GIG needs finite a and b")


def _check_tail(eta, rho2):
    if not (np.all(np.asarray(eta) > 0) and np.all(np.asarray(rho2) > 0)):
        raise ValueError("eta and rho2 must be positive")


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# GIG


def gig_log_pdf(x, p, a, b):
    """Log density of GIG(p, a, b) at ``x > 0``."""
    _check_gig(p, a, b)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gig_log_pdf needs x > 0")
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    log_norm = 0.5 * p * np.log(a / b) - _LOG_2 - log_bessel_k(p, np.sqrt(a * b))
    out = log_norm + (p - 1.0) * np.log(x) - 0.5 * (a * x + b / x)
    return _scalar_or_array(out)


def gig_sample(rng, p, a, b, size=None):
    """Exact GIG(p, a, b) variates; parameters broadcast against ``size``.

    Valid for every real order, including the large negative and positive
    orders of the scale conditional. Returns a float when all inputs are
    scalar and ``size`` is None.
    """
    _check_gig(p, a, b)
    if size is None and np.ndim(p) == 0 and np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(_gig.gig_one(rng, float(p), float(a), float(b)))
    shape = np.broadcast_shapes(np.shape(p), np.shape(a), np.shape(b), () if size is None else size)
    pb, ab, bb = (np.ascontiguousarray(np.broadcast_to(np.asarray(v, float), shape)).ravel() for v in (p, a, b))
    out = np.empty(pb.shape[0])
    _gig.gig_fill(rng, pb, ab, bb, out)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# Hyperbolic and Student-t


def hyperbolic_log_pdf(x, eta, rho2):
    """Log density of the symmetric Hyperbolic(eta, rho2) law."""
    _check_tail(eta, rho2)
    x = np.asarray(x, dtype=float)
    eta_a = np.asarray(eta, dtype=float)
    rho2_a = np.asarray(rho2, dtype=float)
    log_k1 = log_bessel_k(1.0, eta_a)
    out = -np.sqrt(eta_a * (eta_a + x * x / rho2_a)) - np.log(2.0 * np.sqrt(eta_a * rho2_a)) - log_k1
    return _scalar_or_array(out)


def student_t_log_pdf(x, eta, rho2):
    """Log density of t(eta, rho2), evaluated through log-gamma."""
    _check_tail(eta, rho2)
    x = np.asarray(x, dtype=float)
    eta_a = np.asarray(eta, dtype=float)
    rho2_a = np.asarray(rho2, dtype=float)
    out = (
        log_gamma_fn((eta_a + 1.0) / 2.0)
        - log_gamma_fn(eta_a / 2.0)
        + 0.5 * eta_a * np.log(eta_a)
        - 0.5 * (_LOG_PI + np.log(rho2_a))
        - 0.5 * (eta_a + 1.0) * np.log(eta_a + x * x / rho2_a)
    )
    return _scalar_or_array(out)


def normal_log_pdf(x, mean=0.0, var=1.0):
    x = np.asarray(x, dtype=float)
    out = -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)
    return _scalar_or_array(out)


def hyperbolic_sample(rng, eta, rho2, size=None):
    """Hyperbolic(eta, rho2) draws as N(0, s2) with s2 ~ GIG(1, eta/rho2, eta*rho2)."""
    _check_tail(eta, rho2)
    eta = np.asarray(eta, float)
    rho2 = np.asarray(rho2, float)
    s2 = gig_sample(rng, 1.0, eta / rho2, eta * rho2, size=size if size is not None else np.shape(eta * rho2))
    out = rng.standard_normal(np.shape(s2)) * np.sqrt(s2)
    return _scalar_or_array(out)


def student_t_sample(rng, eta, rho2, size=None):
    """t(eta, rho2) draws as N(0, s2) with s2 ~ IGamma(eta/2, eta*rho2/2)."""
    _check_tail(eta, rho2)
    eta = np.asarray(eta, float)
    rho2 = np.asarray(rho2, float)
    s2 = sample_igamma(rng, eta / 2.0, eta * rho2 / 2.0, size=size)
    out = rng.standard_normal(np.shape(s2)) * np.sqrt(s2)
    return _scalar_or_array(out)


# ---------------------------------------------------------------------------
# Standard families


def _positive(name, *vals):
    for v in vals:
        if not np.all(np.asarray(v, dtype=float) > 0):
            raise ValueError(f"{name} parameters must be positive")


def sample_normal(rng, mean=0.0, var=1.0, size=None):
    if not np.all(np.asarray(var) >= 0):
        raise ValueError("Normal variance must be non-negative")
    return _scalar_or_array(rng.normal(mean, np.sqrt(var), size=size))


def sample_gamma(rng, shape, rate, size=None):
    """Gamma with shape ``shape`` and rate ``rate``."""
    _positive("Gamma", shape, rate)
    return _scalar_or_array(rng.gamma(shape, 1.0 / np.asarray(rate, float), size=size))


def sample_igamma(rng, shape, scale, size=None):
    """Inverse gamma with shape ``shape`` and scale ``scale``; mean ``scale/(shape-1)``."""
    _positive("IGamma", shape, scale)
    return _scalar_or_array(np.asarray(scale, float) / rng.gamma(shape, 1.0, size=size))


def sample_beta(rng, s1, s2, size=None):
    _positive("Beta", s1, s2)
    return _scalar_or_array(rng.beta(s1, s2, size=size))


def sample_bernoulli(rng, prob, size=None):
    prob = np.asarray(prob, float)
    if np.any((prob < 0) | (prob > 1)) or np.any(np.isnan(prob)):
        raise ValueError("Bernoulli probability must lie in [0, 1]")
    u = rng.random(size=size if size is not None else prob.shape)
    out = (u < prob).astype(np.int64)
    return int(out) if np.ndim(out) == 0 else out


def sample_disc_uniform(rng, support, size=None):
    support = np.asarray(support)
    if support.ndim != 1 or support.size == 0:
        raise ValueError("DiscUniform needs a non-empty 1-d support")
    idx = rng.integers(support.size, size=size)
    out = support[idx]
    return out.item() if np.ndim(out) == 0 else out


_FAMILIES = {
    "normal": sample_normal,
    "gamma": sample_gamma,
    "igamma": sample_igamma,
    "beta": sample_beta,
    "bernoulli": sample_bernoulli,
    "disc_uniform": sample_disc_uniform,
}


def standard_sample(rng, family, *params, size=None):
    """Dispatch to one of the standard samplers by family name.

    ``family`` is one of ``normal(mean, var)``, ``gamma(shape, rate)``,
    ``igamma(shape, scale)``, ``beta(s1, s2)``, ``bernoulli(p)``,
    ``disc_uniform(support)``.
    """
    try:
        fn = _FAMILIES[family.lower()]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(_FAMILIES)}") from None
    return fn(rng, *params, size=size)


# ---------------------------------------------------------------------------
# Losses


def huber_loss(a, c):
    """Huber loss: ``a^2/2`` for ``|a| <= c``, ``c(|a| - c/2)`` beyond."""
    if not c > 0:
        raise ValueError(f"Huber threshold must be positive, got {c}")
    a = np.asarray(a, dtype=float)
    abs_a = np.abs(a)
    out = np.where(abs_a <= c, 0.5 * a * a, c * (abs_a - 0.5 * c))
    return _scalar_or_array(out)


def hyperbolic_loss(a, eta, rho2):
    """``sqrt(eta (eta + a^2/rho2))``: the negative hyperbolic log-kernel."""
    _check_tail(eta, rho2)
    a = np.asarray(a, dtype=float)
    return _scalar_or_array(np.sqrt(eta * (eta + a * a / rho2)))
