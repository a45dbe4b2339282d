"""Log-scale special functions: modified Bessel K and log-gamma.

``log_bessel_k`` evaluates ``ln K_nu(x)`` without ever forming ``K_nu`` for
large orders. The fractional part ``mu`` of the order (``|mu| <= 1/2``) is
handled by Temme's series for ``x < 2`` and Steed's continued fraction
(CF2) for ``x >= 2``; integer steps in the order are then taken with the
forward recurrence written for the ratio ``K_{k+1}/K_k``, whose terms are
all positive, so the log accumulates without cancellation or overflow.
"""

import math

import numpy as np

__all__ = ["log_bessel_k", "log_gamma_fn", "MAX_BESSEL_ORDER"]

MAX_BESSEL_ORDER = 200.0

_EPS = 1e-16
_MAXIT = 100_000
_TEMME_XMAX = 2.0

# Taylor coefficients c_k of 1/Gamma(1 + z) at odd k = 1, 3, 5, 7, 9, 11.
_RGAMMA_ODD = (
    0.5772156649015329,
    -0.0420026350340952,
    -0.0421977345555443,
    0.0072189432466630,
    -0.0002152416741149,
    -0.0000201348547807,
)


def _temme_gammas(mu):
    """Return (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) for |mu| <= 1/2."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 1e-2:
        mu2 = mu * mu
        acc = 0.0
        for c in reversed(_RGAMMA_ODD):
            acc = acc * mu2 + c
        gam1 = -acc
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    gam2 = 0.5 * (gammi + gampl)
    return gam1, gam2, gampl, gammi


def _log_k_pair_small(mu, x):
    # Temme's series; returns (ln K_mu, ln K_{mu+1}).
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            break
    else:  # pragma: no cover - series always converges for x < 2
        raise ArithmeticError("Temme series failed to converge")
    return math.log(total), math.log(total1 * 2.0 / x)


def _log_k_pair_large(mu, x):
    # Steed's CF2 (Thompson-Barnett); returns (ln K_mu, ln K_{mu+1}).
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu2
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError("Bessel continued fraction failed to converge")
    h *= a1
    log_kmu = 0.5 * math.log(math.pi / (2.0 * x)) - x - math.log(s)
    ratio = (mu + x + 0.5 - h) / x
    return log_kmu, log_kmu + math.log(ratio)


def _log_bessel_k_scalar(order, x):
    if not (math.isfinite(order) and math.isfinite(x)):
        raise ValueError(f"log_bessel_k needs finite inputs, got order={order}, x={x}")
    if x <= 0.0:
        raise ValueError(f"log_bessel_k needs x > 0, got {x}")
    nu = abs(order)
    if nu > MAX_BESSEL_ORDER:
        raise ValueError(f"|order| must be <= {MAX_BESSEL_ORDER}, got {order}")
    steps = int(nu + 0.5)
    mu = nu - steps
    if x < _TEMME_XMAX:
        log_k0, log_k1 = _log_k_pair_small(mu, x)
    else:
        log_k0, log_k1 = _log_k_pair_large(mu, x)
    if steps == 0:
        return log_k0
    # ratio r_k = K_{mu+k+1} / K_{mu+k}; r_{k} = 1/r_{k-1} + 2(mu+k)/x
    r = math.exp(log_k1 - log_k0)
    out = log_k1
    for k in range(1, steps):
        r = 1.0 / r + 2.0 * (mu + k) / x
        out += math.log(r)
    return out


def log_bessel_k(order, x):
    """Natural log of the modified Bessel function of the second kind.

    Parameters
    ----------
    order : float or array_like
        Order ``nu``; only ``|nu|`` matters since ``K_{-nu} = K_nu``.
        Orders beyond ``MAX_BESSEL_ORDER`` in magnitude are rejected.
    x : float or array_like
        Positive argument.

    Returns
    -------
    float or ndarray
        ``ln K_|nu|(x)``, broadcast over the inputs.

    Raises
    ------
    ValueError
        For non-positive or non-finite ``x``, non-finite or too large order.
    """
    if np.ndim(order) == 0 and np.ndim(x) == 0:
        return _log_bessel_k_scalar(float(order), float(x))
    order_b, x_b = np.broadcast_arrays(np.asarray(order, float), np.asarray(x, float))
    out = np.empty(order_b.shape)
    for idx in np.ndindex(out.shape):
        out[idx] = _log_bessel_k_scalar(float(order_b[idx]), float(x_b[idx]))
    return out


def log_gamma_fn(x):
    """``ln Gamma(x)`` for ``x > 0`` (scalar or array)."""
    if np.ndim(x) == 0:
        x = float(x)
        if not x > 0.0:
            raise ValueError(f"log_gamma_fn needs x > 0, got {x}")
        return math.lgamma(x)
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0.0):
        raise ValueError("log_gamma_fn needs x > 0")
    from scipy.special import gammaln

    return gammaln(arr)
