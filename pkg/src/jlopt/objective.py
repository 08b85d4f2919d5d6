"""Exact sampler objective: value, gradient, Hessian operator, eigensolver.

For a sampler (M, tau) with tau = sigma^2, each data point x contributes the
probability that a sampled projection leaves the distortion band,

    phi(v, tau) = 1 + F(lo; k, delta) - F(hi; k, delta),

where v = M x, delta = ||v||^2 / tau, lo = k (1 - eps) / tau and
hi = k (1 + eps) / tau, and F is the noncentral chi-squared CDF.  The total
objective adds the variance regularizer tau / 2.  When eps >= 1 the lower
band edge is nonpositive and the below-band term vanishes identically; the
calibrated threshold does exceed 1 for small target dimensions, so this is
an ordinary operating regime, not an error.

Derivatives are assembled per point in the reduced coordinates (v, tau) and
mapped through the chain rule v = M x.  Writing D(x) = F_{k+2} - F_k and
L(x) = F_k - 2 F_{k+2} + F_{k+4} at a band edge x, the per-point blocks are

    dphi/dv_i        = (v_i / tau) (D(lo) - D(hi))
    dphi/dtau        = -(||v||^2 / 2 tau^2)(D(lo) - D(hi))
                       - (lo / tau) f(lo) + (hi / tau) f(hi)
    d2phi/dv dv^T    = alpha v v^T + beta I
    d2phi/dv dtau    = c v
    d2phi/dtau^2     = e

with f the mixture density and alpha, beta, c, e scalar coefficients built
from D, L, densities at dof k and k+2, and the half-dof-weighted density sum
(all supplied by one kernel call per point and band edge).  Every CDF
difference is taken from whichever of the CDF/survival streams is small, so
the blocks stay accurate when the failure probabilities are tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, SamplerParams
from .errors import ConvergenceError, ParameterError
from .ncx2 import tables_batch, tables_one

_DEFAULT_SIGMA_FLOOR = 1e-8

# Column layout of the kernel tables.
_CDF0, _SF0, _CDF1, _SF1, _CDF2, _SF2, _PDF0, _PDF1, _PDFM = range(9)
_LO, _HI = 0, 1


@dataclass(frozen=True)
class ObjectiveContext:
    """Dataset, target dimension, distortion threshold, and variance floor."""

    data: Dataset
    k: int
    eps: float
    sigma_floor: float = _DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"need k >= 1, got {self.k}")
        if not (self.eps > 0.0) or not math.isfinite(self.eps):
            raise ParameterError(f"need eps > 0, got {self.eps}")
        if not (0.0 < self.sigma_floor <= 1e-4):
            raise ParameterError(f"need sigma_floor in (0, 1e-4], got {self.sigma_floor}")

    @property
    def dim(self) -> int:
        """Flattened parameter dimension k*d + 1."""
        return self.k * self.data.d + 1


@dataclass(frozen=True)
class ReducedPoint:
    """One data point's reduced coordinates: inner products and band edges."""

    v: np.ndarray
    tau: float
    delta: float
    lo: float
    hi: float

    @classmethod
    def build(cls, v: np.ndarray, tau: float, k: int, eps: float) -> "ReducedPoint":
        v = np.asarray(v, dtype=np.float64)
        delta = float(v @ v) / tau
        return cls(v=v, tau=tau, delta=delta, lo=k * (1.0 - eps) / tau, hi=k * (1.0 + eps) / tau)


@dataclass(frozen=True)
class GradientVector:
    """Gradient in sampler coordinates: a k x d mean block and a variance scalar."""

    d_mean: np.ndarray
    d_tau: float

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.d_mean.ravel(), [self.d_tau]])

    def norm(self) -> float:
        return float(math.hypot(np.linalg.norm(self.d_mean), self.d_tau))


def pack(mean: np.ndarray, tau: float) -> np.ndarray:
    """Flatten sampler parameters into one (k*d + 1)-vector."""
    return np.concatenate([np.asarray(mean, dtype=np.float64).ravel(), [tau]])


def unpack(w: np.ndarray, k: int, d: int) -> tuple[np.ndarray, float]:
    """Inverse of :func:`pack`."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (k * d + 1,):
        raise ParameterError(f"expected flat vector of length {k * d + 1}, got {w.shape}")
    return w[:-1].reshape(k, d), float(w[-1])


def _clamped_tau(tau: float, sigma_floor: float) -> float:
    return max(float(tau), sigma_floor)


def _point_quantities(params: SamplerParams, ctx: ObjectiveContext):
    """Per-point inner products, squared norms, and kernel tables."""
    if params.k != ctx.k or params.d != ctx.data.d:
        raise ParameterError(
            f"params shape ({params.k}, {params.d}) does not match context "
            f"k={ctx.k}, d={ctx.data.d}"
        )
    tau = _clamped_tau(params.variance, ctx.sigma_floor)
    v = params.mean @ ctx.data.points.T  # (k, n)
    sq = np.einsum("ij,ij->j", v, v)  # (n,)
    lo = ctx.k * (1.0 - ctx.eps) / tau
    hi = ctx.k * (1.0 + ctx.eps) / tau
    tables = tables_batch(lo, hi, ctx.k, sq / tau)
    return tau, v, sq, lo, hi, tables


def _cdf_shift_diff(tables: np.ndarray, edge: int) -> np.ndarray:
    """F_{k+2} - F_k at a band edge, from whichever stream is accurate."""
    t = tables[:, edge, :]
    return np.where(t[:, _CDF0] <= 0.5, t[:, _CDF1] - t[:, _CDF0], t[:, _SF0] - t[:, _SF1])


def _cdf_shift_diff2(tables: np.ndarray, edge: int) -> np.ndarray:
    """F_k - 2 F_{k+2} + F_{k+4} at a band edge (second mixture difference)."""
    t = tables[:, edge, :]
    return np.where(
        t[:, _CDF0] <= 0.5,
        t[:, _CDF0] - 2.0 * t[:, _CDF1] + t[:, _CDF2],
        -t[:, _SF0] + 2.0 * t[:, _SF1] - t[:, _SF2],
    )


def failure_prob_point(v, tau: float, k: int, eps: float,
                       sigma_floor: float = _DEFAULT_SIGMA_FLOOR) -> float:
    """Probability that one point's sampled squared norm leaves the band.

    Evaluated as F(lo) plus the survival at hi, so tiny failure probabilities
    keep full relative precision.  ``tau`` is clamped below at the floor.
    """
    if not (eps > 0.0):
        raise ParameterError(f"need eps > 0, got {eps}")
    rp = ReducedPoint.build(v, _clamped_tau(tau, sigma_floor), k, eps)
    below = tables_one(rp.lo, k, rp.delta)[_CDF0] if rp.lo > 0.0 else 0.0
    above = tables_one(rp.hi, k, rp.delta)[_SF0]
    return float(min(max(below + above, 0.0), 1.0))


def f_value(params: SamplerParams, ctx: ObjectiveContext) -> float:
    """Union-bound failure probability: the sum of per-point band violations."""
    _, _, _, _, _, tables = _point_quantities(params, ctx)
    phi = np.clip(tables[:, _LO, _CDF0] + tables[:, _HI, _SF0], 0.0, 1.0)
    return float(phi.sum())


def g_value(params: SamplerParams, ctx: ObjectiveContext) -> float:
    """Regularized objective: failure probability plus variance / 2."""
    return f_value(params, ctx) + _clamped_tau(params.variance, ctx.sigma_floor) / 2.0


def grad_g(params: SamplerParams, ctx: ObjectiveContext) -> GradientVector:
    """Analytic gradient of :func:`g_value` in (mean, variance) coordinates."""
    tau, v, sq, lo, hi, tables = _point_quantities(params, ctx)
    d_lo = _cdf_shift_diff(tables, _LO)
    d_hi = _cdf_shift_diff(tables, _HI)
    beta = (d_lo - d_hi) / tau
    d_mean = (v * beta) @ ctx.data.points
    d_tau_pts = (
        -(sq / (2.0 * tau * tau)) * (d_lo - d_hi)
        - (lo / tau) * tables[:, _LO, _PDF0]
        + (hi / tau) * tables[:, _HI, _PDF0]
    )
    return GradientVector(d_mean=d_mean, d_tau=float(d_tau_pts.sum() + 0.5))


def _hessian_coefficients(params: SamplerParams, ctx: ObjectiveContext):
    """Per-point scalars (alpha, beta, c, e) of the reduced Hessian blocks."""
    tau, v, sq, lo, hi, tables = _point_quantities(params, ctx)
    d_lo = _cdf_shift_diff(tables, _LO)
    d_hi = _cdf_shift_diff(tables, _HI)
    l_lo = _cdf_shift_diff2(tables, _LO)
    l_hi = _cdf_shift_diff2(tables, _HI)
    p0_lo = tables[:, _LO, _PDF0]
    p0_hi = tables[:, _HI, _PDF0]
    dp_lo = tables[:, _LO, _PDF1] - p0_lo
    dp_hi = tables[:, _HI, _PDF1] - p0_hi
    pm_lo = tables[:, _LO, _PDFM]
    pm_hi = tables[:, _HI, _PDFM]

    dd = d_lo - d_hi
    ll = l_lo - l_hi
    beta = dd / tau
    alpha = ll / (tau * tau)
    c = (
        -beta / tau
        - (sq / (2.0 * tau)) * alpha
        - (lo / tau**2) * dp_lo
        + (hi / tau**2) * dp_hi
    )
    e = (
        (sq / tau**3) * dd
        + (sq * sq / (4.0 * tau**4)) * ll
        + (sq * lo / tau**3) * dp_lo
        - (sq * hi / tau**3) * dp_hi
        + (lo / tau**2) * (2.0 * p0_lo + pm_lo)
        - (lo * lo / (2.0 * tau**2)) * p0_lo
        - (hi / tau**2) * (2.0 * p0_hi + pm_hi)
        + (hi * hi / (2.0 * tau**2)) * p0_hi
    )
    return v, alpha, beta, c, e


def hessian_vec_product(params: SamplerParams, ctx: ObjectiveContext,
                        w: np.ndarray) -> np.ndarray:
    """Matrix-free product of the objective Hessian with a flat direction.

    Never assembles the dense (kd+1)^2 matrix; each point contributes through
    its rank-structured reduced block mapped through its data vector.
    """
    w_mean, w_tau = unpack(w, ctx.k, ctx.data.d)
    v, alpha, beta, c, e = _hessian_coefficients(params, ctx)
    x = ctx.data.points
    s = w_mean @ x.T  # (k, n): direction inner products per point
    q = np.einsum("ij,ij->j", v, s)  # <v_j, s_j>
    out_mean = (v * (alpha * q + c * w_tau) + s * beta) @ x
    out_tau = float((c * q).sum() + e.sum() * w_tau)
    return np.concatenate([out_mean.ravel(), [out_tau]])


def _lanczos_min_eig(matvec, dim: int, tol: float, max_matvecs: int,
                     seed: int, v0: np.ndarray | None = None):
    """Smallest eigenpair of a symmetric operator by restarted Lanczos.

    Full reorthogonalization keeps the small Krylov bases numerically sound;
    each restart continues from the current Ritz vector.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    if v0 is None:
        v0 = rng.standard_normal(dim)
    v0 = v0 / np.linalg.norm(v0)
    used = 0
    best = None
    while used < max_matvecs:
        m = int(min(dim, 60, max_matvecs - used))
        if m < 1:
            break
        basis = np.zeros((m, dim))
        alphas = np.zeros(m)
        betas = np.zeros(max(m - 1, 0))
        basis[0] = v0
        size = 0
        for i in range(m):
            w = matvec(basis[i])
            used += 1
            alphas[i] = float(basis[i] @ w)
            w = w - alphas[i] * basis[i]
            if i > 0:
                w = w - betas[i - 1] * basis[i - 1]
            # full reorthogonalization against the current basis
            w = w - basis[: i + 1].T @ (basis[: i + 1] @ w)
            size = i + 1
            if i + 1 == m:
                break
            b = float(np.linalg.norm(w))
            if b < 1e-14 * max(1.0, abs(alphas[i])):
                break  # invariant subspace reached
            betas[i] = b
            basis[i + 1] = w / b
        tri = np.diag(alphas[:size])
        if size > 1:
            off = np.diag(betas[: size - 1], 1)
            tri = tri + off + off.T
        evals, evecs = np.linalg.eigh(tri)
        u = basis[:size].T @ evecs[:, 0]
        u = u / np.linalg.norm(u)
        hu = matvec(u)
        used += 1
        lam = float(u @ hu)
        res = float(np.linalg.norm(hu - lam * u))
        if best is None or res < best[2]:
            best = (lam, u, res)
        if res <= tol * max(1.0, abs(lam)):
            return lam, u
        v0 = u
    lam, u, res = best
    raise ConvergenceError(
        f"eigensolver residual {res:.3e} above tolerance after {used} products",
        best=(lam, u, res),
    )


def min_eigenpair(params: SamplerParams, ctx: ObjectiveContext, tol: float,
                  max_iters: int, seed: int = 0):
    """Minimum eigenvalue and unit eigenvector of the objective Hessian.

    ``max_iters`` bounds the number of Hessian-vector products.  Raises
    :class:`ConvergenceError` (carrying the best iterate) on failure.
    """
    if not (tol > 0.0):
        raise ParameterError(f"need tol > 0, got {tol}")
    matvec = lambda w: hessian_vec_product(params, ctx, w)
    return _lanczos_min_eig(matvec, ctx.dim, tol, max_iters, seed)
