"""Pure-Python backend for the noncentral chi-squared kernels.

This module is the reference implementation; ``_ncx2_cy`` is a line-for-line
Cython port of the same algorithms.  Everything here is scalar ``math`` code
so that the two backends stay numerically interchangeable.

The central object is :func:`tables_one`, which returns, for one evaluation
point ``x`` and one noncentrality ``delta``, the nine quantities the exact
objective and its derivatives consume:

    (cdf0, sf0, cdf1, sf1, cdf2, sf2, pdf0, pdf1, pdfm)

where index 0/1/2 means degrees of freedom k, k+2, k+4, the ``pdf`` entries
are mixture densities at dof k and k+2, and ``pdfm`` is the half-dof-weighted
density sum  sum_j w_j ((k+2j)/2 - 1) f_{k+2j}(x)  that appears in the second
tau derivative.  CDF and survival are accumulated as independent streams so
that whichever of the pair is small is obtained without cancellation.
"""

import math

from .errors import SeriesOverflowError

BACKEND = "python"

_GAM_EPS = 1e-16
_GAM_MAX_ITERS = 50_000
_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 2_000_000
_TINY = 1e-300
_LOG_TINY = -745.0
_DELTA_MAX = 4e12


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLERR_C = (1.0 / 12.0, 1.0 / 360.0, 1.0 / 1260.0, 1.0 / 1680.0, 1.0 / 1188.0)


def _stirlerr(n):
    # lgamma(n+1) - [(n+1/2) log n - n + log(2*pi)/2]; series for large n avoids
    # the cancellation the direct form suffers from.
    if n < 16.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _HALF_LOG_2PI
    nn = n * n
    s0, s1, s2, s3, s4 = _STIRLERR_C
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def _bd0(x, mu):
    # Stable binomial deviance x*log(x/mu) + mu - x (Loader's algorithm).
    if abs(x - mu) < 0.1 * (x + mu):
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
    return x * math.log(x / mu) + mu - x


def _dpois_raw(j, lam):
    # lam^j exp(-lam) / Gamma(j+1) for real j >= 0, accurate at any scale.
    if lam <= 0.0:
        return 1.0 if j == 0.0 else 0.0
    if j == 0.0:
        return math.exp(-lam)
    arg = -_stirlerr(j) - _bd0(j, lam)
    if arg < _LOG_TINY:
        return 0.0
    return math.exp(arg) / math.sqrt(2.0 * math.pi * j)


def _gser(s, x):
    # Lower regularized gamma by power series; preferred for x < s + 1.
    ap = s
    term = 1.0 / s
    total = term
    for _ in range(_GAM_MAX_ITERS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAM_EPS:
            return total * s * _dpois_raw(s, x)
    raise SeriesOverflowError(f"gamma series did not converge (s={s}, x={x})")


def _gcf(s, x):
    # Upper regularized gamma by modified Lentz continued fraction; x >= s + 1.
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAM_MAX_ITERS + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAM_EPS:
            return h * s * _dpois_raw(s, x)
    raise SeriesOverflowError(f"gamma continued fraction did not converge (s={s}, x={x})")


def reg_gamma_pair(s, x):
    """Regularized incomplete gamma pair (P, Q), each accurate on its own scale."""
    if x <= 0.0:
        return 0.0, 1.0
    if x < s + 1.0:
        p = _gser(s, x)
        if p > 1.0:
            p = 1.0
        return p, 1.0 - p
    q = _gcf(s, x)
    if q > 1.0:
        q = 1.0
    return 1.0 - q, q


def _half_pdf(a, y):
    # Central chi-squared density (1/2) y^{a-1} e^{-y} / Gamma(a) at y = x/2.
    j = a - 1.0
    if j >= 0.0:
        return 0.5 * _dpois_raw(j, y)
    lp = j * math.log(y) - y - math.lgamma(a)
    return 0.5 * math.exp(lp) if lp > _LOG_TINY else 0.0


class _Acc:
    """Accumulator for the nine mixture sums."""

    __slots__ = ("f0", "s0", "f1", "s1", "f2", "s2", "p0", "p1", "pm", "terms")

    def __init__(self):
        self.f0 = self.s0 = self.f1 = self.s1 = self.f2 = self.s2 = 0.0
        self.p0 = self.p1 = self.pm = 0.0
        self.terms = 0

    def add(self, w, a, y, c, q, p, t):
        # Shifted-dof values derived from the current streams; t is the
        # one-step CDF decrement  y^a e^{-y} / Gamma(a+1).
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
        self.f0 += w * c
        self.s0 += w * q
        self.f1 += w * c1
        self.s1 += w * q1
        self.f2 += w * c2
        self.s2 += w * q2
        self.p0 += w * p
        self.p1 += w * p * y / a
        self.pm += w * (a - 1.0) * p
        self.terms += 1

    def tiny_term(self, w, a, c, q, p):
        return (
            w * c <= _SERIES_RTOL * self.f0 + _TINY
            and w * q <= _SERIES_RTOL * self.s0 + _TINY
            and w * p * (a + 1.0) <= _SERIES_RTOL * self.p0 + _TINY
        )

    def result(self):
        return (
            min(self.f0, 1.0),
            min(self.s0, 1.0),
            min(self.f1, 1.0),
            min(self.s1, 1.0),
            min(self.f2, 1.0),
            min(self.s2, 1.0),
            self.p0,
            self.p1,
            self.pm,
        )


def tables_one(x, k, delta):
    """All nine mixture quantities at one (x, dof=k, noncentrality=delta).

    The Poisson-weighted series is evaluated outward from its modal index
    floor(delta/2) with log-space starting values; each side stops once the
    next term contributes less than 1e-16 of every accumulated sum.
    """
    if x <= 0.0:
        return (0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    if delta > _DELTA_MAX:
        raise SeriesOverflowError(
            f"noncentrality too large for series evaluation (delta={delta})"
        )
    hk = 0.5 * k
    y = 0.5 * x

    acc = _Acc()
    if delta <= 0.0:
        c, q = reg_gamma_pair(hk, y)
        p = _half_pdf(hk, y)
        acc.add(1.0, hk, y, c, q, p, x * p / hk)
        return acc.result()

    hd = 0.5 * delta
    jm = int(hd)
    w0 = _dpois_raw(float(jm), hd)
    a0 = hk + jm
    c0, q0 = reg_gamma_pair(a0, y)
    p0 = _half_pdf(a0, y)
    t0 = x * p0 / a0

    # Upward pass (modal term included): additions drive the survival stream,
    # so it stays exact where it matters (x above the bulk).
    j, a, w, c, q, p, t = jm, a0, w0, c0, q0, p0, t0
    while True:
        acc.add(w, a, y, c, q, p, t)
        if acc.terms > _SERIES_MAX_TERMS:
            raise SeriesOverflowError(
                f"noncentral mixture did not converge (x={x}, k={k}, delta={delta})"
            )
        if acc.tiny_term(w, a, c, q, p) or w == 0.0:
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

    # Downward pass: additions drive the lower-CDF stream (x below the bulk).
    j, a, w, c, q, p, t = jm, a0, w0, c0, q0, p0, t0
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
        acc.add(w, a, y, c, q, p, t)
        if acc.terms > _SERIES_MAX_TERMS:
            raise SeriesOverflowError(
                f"noncentral mixture did not converge (x={x}, k={k}, delta={delta})"
            )
        if acc.tiny_term(w, a, c, q, p) or w == 0.0:
            break

    return acc.result()


def tables_batch(lo, hi, k, deltas, out):
    """Fill ``out[n, 2, 9]`` with tables at both band edges for every delta."""
    n = len(deltas)
    for i in range(n):
        d = deltas[i]
        row = tables_one(lo, k, d)
        for m in range(9):
            out[i, 0, m] = row[m]
        row = tables_one(hi, k, d)
        for m in range(9):
            out[i, 1, m] = row[m]
    return out
