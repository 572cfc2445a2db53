"""Complex special functions used by the estimators.

Gamma is evaluated from a Lanczos partial-fraction sum in log form, with the
reflection formula below ``Re z = 1/2``; working in logs keeps it accurate far
up the imaginary axis where ``|Gamma|`` decays like ``exp(-pi |Im z| / 2)``.

Kummer's function 1F1 switches between the Taylor series (``|z| < 30``) and
the large-``|z|`` asymptotic expansion.  Where neither reaches the requested
accuracy the value is carried along a ray by Taylor-stepping Kummer's ODE.
"""
import cmath
import math

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DomainError, PoleError

POLE_TOL = 1e-14

# Godfrey's coefficients for g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _check_poles(z):
    nearest = np.round(z.real)
    bad = (nearest <= 0) & (np.abs(z - nearest) < POLE_TOL)
    if np.any(bad):
        raise PoleError(f"Gamma pole at {z[bad][0]!r}")


def _lanczos_loggamma(z):
    # valid for Re z >= 1/2
    w = z - 1.0
    acc = np.full(w.shape, _LANCZOS_COEF[0], dtype=complex)
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (w + i)
    t = w + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z):
    # log sin(pi z) for Im z >= 0, free of overflow for large Im z
    e = np.exp(2j * np.pi * z)
    return -1j * np.pi * z + np.log(0.5j) + np.log1p(-e)


def complex_loggamma(z):
    """Logarithm of Gamma on the complex plane.

    The imaginary part is not reduced to the principal branch; only
    ``exp(complex_loggamma(z))`` is meaningful.  Conjugate symmetry is exact.
    """
    zarr = np.asarray(z, dtype=complex)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)
    _check_poles(zarr)
    flip = zarr.imag < 0
    w = np.where(flip, np.conj(zarr), zarr)
    out = np.empty_like(w)
    right = w.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_loggamma(w[right])
    if np.any(~right):
        wl = w[~right]
        out[~right] = _LOG_PI - _log_sin_pi(wl) - _lanczos_loggamma(1.0 - wl)
    out = np.where(flip, np.conj(out), out)
    return out[0] if scalar else out


def complex_gamma(z):
    """Gamma function for complex (array) arguments.

    Relative accuracy is about 1e-13 on ``|Re z| <= 10, |Im z| <= 200``.

    Raises
    ------
    PoleError
        If any ``z`` is within 1e-14 of a non-positive integer.
    """
    return np.exp(complex_loggamma(z))


def reciprocal_gamma(z):
    """``1/Gamma(z)``, equal to zero at the poles of Gamma."""
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    nearest = np.round(zarr.real)
    at_pole = (nearest <= 0) & (np.abs(zarr - nearest) < POLE_TOL)
    out = np.zeros_like(zarr)
    if np.any(~at_pole):
        out[~at_pole] = np.exp(-complex_loggamma(zarr[~at_pole]))
    return out[0] if np.ndim(z) == 0 else out


def gamma_envelope_ratio(alpha, beta):
    """Ratio ``|Gamma(alpha + i beta)| / (|beta|^(alpha-1/2) e^(-pi |beta| / 2))``.

    Bounded above and below uniformly in ``|beta| >= 2`` for fixed
    ``alpha >= -2``; tends to ``sqrt(2 pi)`` as ``|beta|`` grows.
    """
    if abs(beta) < 2:
        raise DomainError(f"|beta| must be >= 2, got {beta}")
    if alpha < -2:
        raise DomainError(f"alpha must be >= -2, got {alpha}")
    lg = complex_loggamma(complex(alpha, beta))
    b = abs(beta)
    return math.exp(lg.real - (alpha - 0.5) * math.log(b) + b * math.pi / 2)


# ---------------------------------------------------------------------------
# Kummer's confluent hypergeometric function
# ---------------------------------------------------------------------------

KUMMER_SWITCH = 30.0
_EPS = 2.220446049250313e-16


def _rgamma(z):
    return complex(reciprocal_gamma(z))


def _loggamma(z):
    return complex(complex_loggamma(z))


def _series(a, b, z, tol):
    """Taylor series; returns (value, ok)."""
    if z.real < 0:
        # Kummer's transformation removes the cancellation for Re z < 0
        val, ok = _series(b - a, b, -z, tol)
        return cmath.exp(z) * val, ok
    total = 1.0 + 0j
    term = 1.0 + 0j
    biggest = 1.0
    small_run = 0
    for k in range(10000):
        term *= (a + k) / (b + k) * z / (k + 1)
        total += term
        mag = abs(term)
        biggest = max(biggest, mag)
        if mag <= _EPS * abs(total):
            small_run += 1
            if small_run >= 3 and k > abs(z):
                break
        else:
            small_run = 0
        if term == 0:
            break
    else:
        return total, False
    rounding = 4 * _EPS * biggest * math.sqrt(k + 1)
    return total, rounding <= tol * abs(total)


def _asymptotic_sum(p, q, w, max_terms=200):
    """Partial sum of sum_s (p)_s (q)_s / s! w^-s up to the smallest term."""
    total = 1.0 + 0j
    term = 1.0 + 0j
    last = 1.0
    for s in range(max_terms):
        nxt = term * (p + s) * (q + s) / ((s + 1) * w)
        mag = abs(nxt)
        if mag > last:
            break
        term = nxt
        total += term
        last = mag
        if mag == 0 or mag < 1e-18 * abs(total):
            break
    return total, last


def _asymptotic(a, b, z, tol):
    sign = 1.0 if z.imag >= 0 else -1.0
    s1, e1 = _asymptotic_sum(1 - a, b - a, z)
    s2, e2 = _asymptotic_sum(a, a - b + 1, -z)
    lgb = _loggamma(b)
    logz = cmath.log(z)
    part1 = part2 = 0j
    mag1 = mag2 = 0.0
    if _rgamma(a) != 0:
        pref1 = cmath.exp(lgb - _loggamma(a) + z + (a - b) * logz)
        part1 = pref1 * s1
        mag1 = abs(pref1) * e1
    if _rgamma(b - a) != 0:
        pref2 = cmath.exp(lgb - _loggamma(b - a) + sign * 1j * math.pi * a - a * logz)
        part2 = pref2 * s2
        mag2 = abs(pref2) * e2
    value = part1 + part2
    return value, (mag1 + mag2) <= tol * abs(value)


def _ode_continue(a, b, z, tol):
    """Carry (M, M') from a small-|z| start along the ray to z."""
    r0 = min(abs(z), 8.0)
    direction = z / abs(z)
    zeta = direction * r0
    w, ok0 = _series(a, b, zeta, tol)
    dw, ok1 = _series(a + 1, b + 1, zeta, tol)
    dw *= a / b
    if not (ok0 and ok1):
        raise ConvergenceError("Kummer ODE start value inaccurate")
    remaining = abs(z) - r0
    while remaining > 0:
        h_len = min(0.5 * abs(zeta), 3.0, remaining)
        h = direction * h_len
        c0, c1 = w, dw
        val = c0 + c1 * h
        der = c1
        hp = h
        for k in range(400):
            c2 = (-(k + 1) * (k + b - zeta) * c1 + (k + a) * c0) / (zeta * (k + 2) * (k + 1))
            val += c2 * hp * h
            der += (k + 2) * c2 * hp
            hp *= h
            if abs(c2 * hp * h) < 1e-18 * abs(val) and abs(c1 * hp) < 1e-18 * abs(val) and k > 4:
                break
            c0, c1 = c1, c2
        w, dw = val, der
        zeta = zeta + h
        remaining -= h_len
        if not (cmath.isfinite(w) and cmath.isfinite(dw)):
            raise ConvergenceError("Kummer ODE continuation overflowed")
    return w


def _kummer_scalar(a, b, z, tol):
    a, b, z = complex(a), complex(b), complex(z)
    nb = round(b.real)
    if nb <= 0 and abs(b - nb) < POLE_TOL:
        raise PoleError(f"1F1 denominator parameter at pole b={b}")
    if z == 0:
        return 1.0 + 0j
    if abs(z) < KUMMER_SWITCH:
        value, ok = _series(a, b, z, tol)
    else:
        value, ok = _asymptotic(a, b, z, tol)
    if ok:
        return value
    value = _ode_continue(a, b, z, tol)
    if not cmath.isfinite(value):
        raise ConvergenceError(f"1F1({a}; {b}; {z}) did not converge")
    return value


def kummer_1f1(a, b, z, tol=1e-10):
    """Kummer's confluent hypergeometric function ``1F1(a; b; z)``.

    Accepts scalars or broadcastable arrays of complex parameters.

    Raises
    ------
    PoleError
        ``b`` is a non-positive integer.
    ConvergenceError
        No evaluation route reached ``tol``.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(z) == 0:
        return _kummer_scalar(a, b, z, tol)
    a, b, z = np.broadcast_arrays(np.asarray(a, complex), np.asarray(b, complex), np.asarray(z, complex))
    out = np.empty(a.shape, dtype=complex)
    for idx in np.ndindex(a.shape):
        out[idx] = _kummer_scalar(a[idx], b[idx], z[idx], tol)
    return out


def erfc(z):
    """Complementary error function for complex arguments (Faddeeva based)."""
    return _sp.erfc(np.asarray(z, dtype=complex))
