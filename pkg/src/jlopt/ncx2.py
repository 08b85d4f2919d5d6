"""Noncentral chi-squared distribution functions.

A compiled accelerator (``jlopt._ncx2_cy``) is preferred when it imported
cleanly; otherwise the pure-Python reference backend is used.  Setting the
environment variable ``JLOPT_PURE_PYTHON=1`` forces the fallback.  Both
backends implement identical algorithms; results agree to near machine
precision (subtraction-derived tiny mixture components may differ by about
1e-11 relative, from libm ulp differences).  See
``benchmarks/bench_backends.py`` for the speed comparison.

The CDF follows the Poisson-mixture representation

    F(x; k, delta) = sum_j  e^{-delta/2} (delta/2)^j / j!  *  Q(x; k + 2j)

with Q the central chi-squared CDF (a regularized lower incomplete gamma),
evaluated outward from the modal mixture index with log-space weights.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _ncx2_py
from .errors import ParameterError

if os.environ.get("JLOPT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _ncx2_py
else:
    try:
        from . import _ncx2_cy as _impl
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = _ncx2_py

BACKEND = _impl.BACKEND

tables_one = _impl.tables_one
reg_gamma_pair = _impl.reg_gamma_pair


def backend_name():
    """Name of the active kernel backend: ``"cython"`` or ``"python"``."""
    return BACKEND


@dataclass(frozen=True)
class Ncx2Params:
    """Validated evaluation point: integer dof >= 1, noncentrality and argument >= 0."""

    dof: int
    noncentrality: float
    argument: float

    def __post_init__(self):
        if self.dof != int(self.dof) or int(self.dof) < 1:
            raise ParameterError(
                f"degrees of freedom must be a positive integer, got {self.dof}"
            )
        if not (self.noncentrality >= 0.0) or math.isinf(self.noncentrality):
            raise ParameterError(
                f"noncentrality must be finite and >= 0, got {self.noncentrality}"
            )
        if not (self.argument >= 0.0):
            raise ParameterError(f"argument must be >= 0, got {self.argument}")
        object.__setattr__(self, "dof", int(self.dof))
        object.__setattr__(self, "noncentrality", float(self.noncentrality))
        object.__setattr__(self, "argument", float(self.argument))


def reg_lower_gamma(s, x):
    """Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s)."""
    if not (s > 0.0):
        raise ParameterError(f"shape must be positive, got {s}")
    if not (x >= 0.0):
        raise ParameterError(f"argument must be >= 0, got {x}")
    return reg_gamma_pair(float(s), float(x))[0]


def reg_upper_gamma(s, x):
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if not (s > 0.0):
        raise ParameterError(f"shape must be positive, got {s}")
    if not (x >= 0.0):
        raise ParameterError(f"argument must be >= 0, got {x}")
    return reg_gamma_pair(float(s), float(x))[1]


def ncx2_cdf(x, k, delta):
    """CDF of the noncentral chi-squared distribution, clamped to [0, 1]."""
    p = Ncx2Params(dof=k, noncentrality=delta, argument=x)
    return tables_one(p.argument, p.dof, p.noncentrality)[0]


def ncx2_sf(x, k, delta):
    """Survival function 1 - CDF, computed without cancellation."""
    p = Ncx2Params(dof=k, noncentrality=delta, argument=x)
    return tables_one(p.argument, p.dof, p.noncentrality)[1]


def ncx2_pdf(x, k, delta):
    """Density of the noncentral chi-squared distribution at x > 0."""
    if not (x > 0.0):
        raise ParameterError(f"density argument must be > 0, got {x}")
    p = Ncx2Params(dof=k, noncentrality=delta, argument=x)
    return tables_one(p.argument, p.dof, p.noncentrality)[6]


def ncx2_cdf_ddelta(x, k, delta):
    """Derivative of the CDF in the noncentrality parameter.

    Shifting the mixture index by one yields the closed form
    -F(x; k, delta)/2 + F(x; k+2, delta)/2, evaluated here from whichever of
    the CDF/survival streams carries full precision.
    """
    p = Ncx2Params(dof=k, noncentrality=delta, argument=x)
    t = tables_one(p.argument, p.dof, p.noncentrality)
    if t[0] <= 0.5:
        return 0.5 * (t[2] - t[0])
    return 0.5 * (t[1] - t[3])


def tables_batch(lo, hi, k, deltas):
    """Mixture tables at both band edges for an array of noncentralities.

    Returns an array of shape (n, 2, 9); axis 1 indexes the band edge
    (0 = lower, 1 = upper) and axis 2 the quantities
    (cdf0, sf0, cdf1, sf1, cdf2, sf2, pdf0, pdf1, pdfm) at dof k, k+2, k+4.
    """
    deltas = np.ascontiguousarray(deltas, dtype=np.float64)
    out = np.empty((deltas.shape[0], 2, 9), dtype=np.float64)
    _impl.tables_batch(float(lo), float(hi), int(k), deltas, out)
    return out
