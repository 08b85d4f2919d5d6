# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the noncentral chi-squared kernels.

Line-for-line port of ``jlopt._ncx2_py``; see that module for the algorithm
notes.  Kept in lockstep so the two backends agree to within a few ulps.
"""

from libc.math cimport exp, fabs, lgamma, log, sqrt

import numpy as np

from .errors import SeriesOverflowError

BACKEND = "cython"

cdef double _GAM_EPS = 1e-16
cdef int _GAM_MAX_ITERS = 50000
cdef double _SERIES_RTOL = 1e-16
cdef long _SERIES_MAX_TERMS = 2000000
cdef double _TINY = 1e-300
cdef double _LOG_TINY = -745.0
cdef double _DELTA_MAX = 4e12
cdef double _HALF_LOG_2PI = 0.9189385332046727417803297364
cdef double _TWO_PI = 6.283185307179586476925286766559
cdef double _S0 = 1.0 / 12.0
cdef double _S1 = 1.0 / 360.0
cdef double _S2 = 1.0 / 1260.0
cdef double _S3 = 1.0 / 1680.0
cdef double _S4 = 1.0 / 1188.0


cdef double _stirlerr(double n) noexcept:
    cdef double nn
    if n < 16.0:
        return lgamma(n + 1.0) - (n + 0.5) * log(n) + n - _HALF_LOG_2PI
    nn = n * n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


cdef double _bd0(double x, double mu) noexcept:
    cdef double d, v, s, ej, v2, s1
    cdef long j
    if fabs(x - mu) < 0.1 * (x + mu):
        d = x - mu
        v = d / (x + mu)
        s = d * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2.0 * j + 1.0)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * log(x / mu) + mu - x


cdef double _dpois_raw(double j, double lam) noexcept:
    cdef double arg
    if lam <= 0.0:
        return 1.0 if j == 0.0 else 0.0
    if j == 0.0:
        return exp(-lam)
    arg = -_stirlerr(j) - _bd0(j, lam)
    if arg < _LOG_TINY:
        return 0.0
    return exp(arg) / sqrt(_TWO_PI * j)


cdef double _half_pdf(double a, double y) noexcept:
    cdef double j = a - 1.0
    cdef double lp
    if j >= 0.0:
        return 0.5 * _dpois_raw(j, y)
    lp = j * log(y) - y - lgamma(a)
    return 0.5 * exp(lp) if lp > _LOG_TINY else 0.0


cdef double _gser(double s, double x) except? -1.0:
    cdef double ap = s
    cdef double term = 1.0 / s
    cdef double total = term
    cdef int i
    for i in range(_GAM_MAX_ITERS):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * _GAM_EPS:
            return total * s * _dpois_raw(s, x)
    raise SeriesOverflowError(f"gamma series did not converge (s={s}, x={x})")


cdef double _gcf(double s, double x) except? -1.0:
    cdef double b = x + 1.0 - s
    cdef double c = 1.0 / _TINY
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, _GAM_MAX_ITERS + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if fabs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if fabs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _GAM_EPS:
            return h * s * _dpois_raw(s, x)
    raise SeriesOverflowError(f"gamma continued fraction did not converge (s={s}, x={x})")


cdef int _pair(double s, double x, double* p_out, double* q_out) except -1:
    cdef double v
    if x <= 0.0:
        p_out[0] = 0.0
        q_out[0] = 1.0
        return 0
    if x < s + 1.0:
        v = _gser(s, x)
        if v > 1.0:
            v = 1.0
        p_out[0] = v
        q_out[0] = 1.0 - v
        return 0
    v = _gcf(s, x)
    if v > 1.0:
        v = 1.0
    p_out[0] = 1.0 - v
    q_out[0] = v
    return 0


def reg_gamma_pair(double s, double x):
    """Regularized incomplete gamma pair (P, Q), each accurate on its own scale."""
    cdef double p, q
    _pair(s, x, &p, &q)
    return p, q


cdef int _tables_one_c(double x, double k, double delta, double* out) except -1:
    cdef double hk = 0.5 * k
    cdef double y = 0.5 * x
    cdef double F0 = 0.0, S0 = 0.0, F1 = 0.0, S1 = 0.0, F2 = 0.0, S2 = 0.0
    cdef double P0 = 0.0, P1 = 0.0, PM = 0.0
    cdef long terms = 0
    cdef double hd, w0, a0, c0, q0, p0, t0
    cdef double w, a, c, q, p, t, t1, c1, q1, c2, q2, td
    cdef long j, jm

    if x <= 0.0:
        out[0] = 0.0; out[1] = 1.0; out[2] = 0.0; out[3] = 1.0
        out[4] = 0.0; out[5] = 1.0; out[6] = 0.0; out[7] = 0.0; out[8] = 0.0
        return 0
    if delta > _DELTA_MAX:
        raise SeriesOverflowError(
            f"noncentrality too large for series evaluation (delta={delta})"
        )

    if delta <= 0.0:
        _pair(hk, y, &c0, &q0)
        p0 = _half_pdf(hk, y)
        t0 = x * p0 / hk
        t1 = t0 * y / (hk + 1.0)
        c1 = c0 - t0
        if c1 < 0.0:
            c1 = 0.0
        q1 = q0 + t0
        if q1 > 1.0:
            q1 = 1.0
        c2 = c1 - t1
        if c2 < 0.0:
            c2 = 0.0
        q2 = q1 + t1
        if q2 > 1.0:
            q2 = 1.0
        out[0] = c0; out[1] = q0; out[2] = c1; out[3] = q1; out[4] = c2; out[5] = q2
        out[6] = p0; out[7] = p0 * y / hk; out[8] = (hk - 1.0) * p0
        return 0

    hd = 0.5 * delta
    jm = <long> hd
    w0 = _dpois_raw(<double> jm, hd)
    a0 = hk + jm
    _pair(a0, y, &c0, &q0)
    p0 = _half_pdf(a0, y)
    t0 = x * p0 / a0

    # Upward pass (modal term included): additions drive the survival stream.
    j = jm; a = a0; w = w0; c = c0; q = q0; p = p0; t = t0
    while True:
        t1 = t * y / (a + 1.0)
        c1 = c - t
        if c1 < 0.0:
            c1 = 0.0
        q1 = q + t
        if q1 > 1.0:
            q1 = 1.0
        c2 = c1 - t1
        if c2 < 0.0:
            c2 = 0.0
        q2 = q1 + t1
        if q2 > 1.0:
            q2 = 1.0
        F0 += w * c; S0 += w * q; F1 += w * c1; S1 += w * q1; F2 += w * c2; S2 += w * q2
        P0 += w * p; P1 += w * p * y / a; PM += w * (a - 1.0) * p
        terms += 1
        if terms > _SERIES_MAX_TERMS:
            raise SeriesOverflowError(
                f"noncentral mixture did not converge (x={x}, k={k}, delta={delta})"
            )
        if (w * c <= _SERIES_RTOL * F0 + _TINY
                and w * q <= _SERIES_RTOL * S0 + _TINY
                and w * p * (a + 1.0) <= _SERIES_RTOL * P0 + _TINY):
            break
        if w == 0.0:
            break
        w *= hd / (j + 1.0)
        c -= t
        if c < 0.0:
            c = 0.0
        q += t
        if q > 1.0:
            q = 1.0
        p *= y / a
        t *= y / (a + 1.0)
        a += 1.0
        j += 1

    # Downward pass: additions drive the lower-CDF stream.
    j = jm; a = a0; w = w0; c = c0; q = q0; p = p0; t = t0
    while j > 0:
        w *= j / hd
        td = t * a / y
        c += td
        if c > 1.0:
            c = 1.0
        q -= td
        if q < 0.0:
            q = 0.0
        p *= (a - 1.0) / y
        t = td
        a -= 1.0
        j -= 1
        t1 = t * y / (a + 1.0)
        c1 = c - t
        if c1 < 0.0:
            c1 = 0.0
        q1 = q + t
        if q1 > 1.0:
            q1 = 1.0
        c2 = c1 - t1
        if c2 < 0.0:
            c2 = 0.0
        q2 = q1 + t1
        if q2 > 1.0:
            q2 = 1.0
        F0 += w * c; S0 += w * q; F1 += w * c1; S1 += w * q1; F2 += w * c2; S2 += w * q2
        P0 += w * p; P1 += w * p * y / a; PM += w * (a - 1.0) * p
        terms += 1
        if terms > _SERIES_MAX_TERMS:
            raise SeriesOverflowError(
                f"noncentral mixture did not converge (x={x}, k={k}, delta={delta})"
            )
        if (w * c <= _SERIES_RTOL * F0 + _TINY
                and w * q <= _SERIES_RTOL * S0 + _TINY
                and w * p * (a + 1.0) <= _SERIES_RTOL * P0 + _TINY):
            break
        if w == 0.0:
            break

    out[0] = F0 if F0 < 1.0 else 1.0
    out[1] = S0 if S0 < 1.0 else 1.0
    out[2] = F1 if F1 < 1.0 else 1.0
    out[3] = S1 if S1 < 1.0 else 1.0
    out[4] = F2 if F2 < 1.0 else 1.0
    out[5] = S2 if S2 < 1.0 else 1.0
    out[6] = P0; out[7] = P1; out[8] = PM
    return 0


def tables_one(double x, k, double delta):
    """All nine mixture quantities at one (x, dof=k, noncentrality=delta)."""
    cdef double buf[9]
    _tables_one_c(x, <double> k, delta, buf)
    return (buf[0], buf[1], buf[2], buf[3], buf[4], buf[5], buf[6], buf[7], buf[8])


def tables_batch(double lo, double hi, k, double[::1] deltas, double[:, :, ::1] out):
    """Fill ``out[n, 2, 9]`` with tables at both band edges for every delta."""
    cdef Py_ssize_t n = deltas.shape[0]
    cdef Py_ssize_t i
    cdef double kk = <double> k
    cdef double buf[9]
    cdef int m
    for i in range(n):
        _tables_one_c(lo, kk, deltas[i], buf)
        for m in range(9):
            out[i, 0, m] = buf[m]
        _tables_one_c(hi, kk, deltas[i], buf)
        for m in range(9):
            out[i, 1, m] = buf[m]
    return np.asarray(out)
