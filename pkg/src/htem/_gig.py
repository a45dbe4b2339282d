"""Compiled GIG rejection kernels.

Two-parameter form: density proportional to ``x**(lam - 1) * exp(-omega/2 * (x + 1/x))``
with ``lam >= 0``. Three regimes (Hormann & Leydold, 2014):

* ratio-of-uniforms with mode shift when ``lam > 2`` or ``omega > 3``;
* ratio-of-uniforms without shift when ``lam >= 1 - 2.25 omega**2`` or ``omega > 0.2``;
* a piecewise dominating density otherwise (``lam < 1``, tiny ``omega``).

The kernels consume uniforms from the caller's ``numpy.random.Generator``.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


@numba.njit(cache=True)
def _rou_shift(rng, lam, omega):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    # extremes of (x - xm) sqrt(f(x)) solve y^3 + a y^2 + b y + c = 0
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c
    arg = -q / (2.0 * math.sqrt(-(p * p * p) / 27.0))
    arg = min(1.0, max(-1.0, arg))
    fi = math.acos(arg)
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = rng.random()
        x = u / v + xm
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


@numba.njit(cache=True)
def _rou_noshift(rng, lam, omega):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * rng.random()
        v = rng.random()
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


@numba.njit(cache=True)
def _dominating(rng, lam, omega):
    xm = _mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = x0 ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam == 0.0:
            a1 = k1 * math.log(2.0 / (omega * omega))
        else:
            a1 = k1 / lam * ((2.0 / omega) ** lam - x0**lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-1.0) / omega
    atot = a0 + a1 + a2
    while True:
        v = atot * rng.random()
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        elif v <= a0 + a1:
            v -= a0
            if lam == 0.0:
                x = omega * math.exp(math.exp(omega) * v)
                hx = k1 / x
            else:
                x = (x0**lam + lam / k1 * v) ** (1.0 / lam)
                hx = k1 * x ** (lam - 1.0)
        else:
            v -= a0 + a1
            edge = x0 if x0 > 2.0 / omega else 2.0 / omega
            x = -2.0 / omega * math.log(math.exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v)
            hx = k2 * math.exp(-omega / 2.0 * x)
        u = rng.random() * hx
        if math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


@numba.njit(cache=True)
def _standard(rng, lam, omega):
    if lam > 2.0 or omega > 3.0:
        return _rou_shift(rng, lam, omega)
    if lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        return _rou_noshift(rng, lam, omega)
    return _dominating(rng, lam, omega)


@numba.njit(cache=True)
def gig_fill(rng, p, a, b, out):
    """Fill ``out`` with GIG(p[i], a[i], b[i]) draws (flat, equal-length arrays)."""
    for i in range(out.shape[0]):
        lam = abs(p[i])
        omega = math.sqrt(a[i] * b[i])
        x = _standard(rng, lam, omega)
        scale = math.sqrt(b[i] / a[i])
        if p[i] >= 0.0:
            out[i] = scale * x
        else:
            out[i] = scale / x
    return out


@numba.njit(cache=True)
def gig_one(rng, p, a, b):
    lam = abs(p)
    omega = math.sqrt(a * b)
    x = _standard(rng, lam, omega)
    scale = math.sqrt(b / a)
    return scale * x if p >= 0.0 else scale / x


def warmup():
    """Trigger compilation (or cache load) of the kernels."""
    rng = np.random.default_rng(0)
    gig_one(rng, 1.0, 1.0, 1.0)
    gig_fill(rng, np.ones(1), np.ones(1), np.ones(1), np.empty(1))
